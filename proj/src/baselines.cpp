#include "odtte/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace odtte {

namespace {
constexpr double kEarthRadiusKm = 6371.0;
constexpr double kPi = 3.14159265358979323846;

// Degree spans guaranteed to contain the haversine disk of radius r_km.
double lat_span_deg(double r_km) { return r_km / kEarthRadiusKm * 180.0 / kPi; }

double lon_span_deg(double r_km, double lat_deg) {
    const double c = r_km / kEarthRadiusKm;
    const double dlat = lat_span_deg(r_km);
    const double far = std::min(89.5, std::fabs(lat_deg) + dlat);
    const double cosf = std::cos(far * kPi / 180.0);
    const double s = std::sin(c);
    if (s >= cosf) return 180.0;
    return std::asin(s / cosf) * 180.0 / kPi * 1.0000001; // guard rounding outward
}

bool same_dow_class(int a, int b) { return (a >= 5) == (b >= 5); }

bool hour_adjacent(int a, int b) {
    const int d = std::abs(a - b);
    return std::min(d, 24 - d) <= 1;
}
} // namespace

void SBTTEParams::validate() const {
    if (radius_o_km <= 0 || radius_d_km <= 0)
        throw ContractError("SB-TTE radii must be positive");
    if (min_neighbors < 1)
        throw ContractError("SB-TTE min_neighbors must be >= 1");
    if (growth <= 1.0 || max_expansions < 0)
        throw ContractError("SB-TTE growth must exceed 1 and max_expansions be >= 0");
}

NeighborIndex::NeighborIndex(const Dataset& train, double cell_size_deg) : cell_(cell_size_deg) {
    if (cell_size_deg <= 0)
        throw ContractError("build_index: cell size must be positive");
    if (train.records.empty())
        throw ContractError("build_index: empty training set");

    entries_.reserve(train.records.size());
    lat0_ = train.records[0].o_lat;
    lon0_ = train.records[0].o_lon;
    for (const DeliveryRecord& r : train.records) {
        lat0_ = std::min({lat0_, r.o_lat, r.d_lat});
        lon0_ = std::min({lon0_, r.o_lon, r.d_lon});
    }

    double sum = 0;
    for (const DeliveryRecord& r : train.records) {
        Entry e;
        e.o_lat = r.o_lat;
        e.o_lon = r.o_lon;
        e.d_lat = r.d_lat;
        e.d_lon = r.d_lon;
        e.duration = r.duration_h();
        const CivilTime ct = unix_to_civil(r.ofd_time);
        e.hour = ct.hour;
        e.dow = day_of_week(r.ofd_time);
        sum += e.duration;

        const int idx = static_cast<int>(entries_.size());
        buckets_[key_for(e.o_lat, e.o_lon, e.d_lat, e.d_lon)].push_back(idx);
        entries_.push_back(e);
    }
    global_mean_ = sum / static_cast<double>(entries_.size());
}

std::uint64_t NeighborIndex::key_for(double o_lat, double o_lon, double d_lat,
                                     double d_lon) const {
    auto cell = [this](double v, double v0) {
        return static_cast<std::int64_t>(std::floor((v - v0) / cell_));
    };
    auto pack = [](std::int64_t c) {
        return static_cast<std::uint64_t>((c + 32768) & 0xFFFF);
    };
    return (pack(cell(o_lat, lat0_)) << 48) | (pack(cell(o_lon, lon0_)) << 32) |
           (pack(cell(d_lat, lat0_)) << 16) | pack(cell(d_lon, lon0_));
}

std::vector<int> NeighborIndex::bucket_members(const DeliveryRecord& r) const {
    auto it = buckets_.find(key_for(r.o_lat, r.o_lon, r.d_lat, r.d_lon));
    return it == buckets_.end() ? std::vector<int>{} : it->second;
}

bool NeighborIndex::matches(const Entry& e, const DeliveryRecord& q, double ro, double rd,
                            bool temporal) const {
    if (haversine_km(e.o_lat, e.o_lon, q.o_lat, q.o_lon) > ro) return false;
    if (haversine_km(e.d_lat, e.d_lon, q.d_lat, q.d_lon) > rd) return false;
    if (temporal) {
        const CivilTime ct = unix_to_civil(q.ofd_time);
        if (!same_dow_class(e.dow, day_of_week(q.ofd_time))) return false;
        if (!hour_adjacent(e.hour, ct.hour)) return false;
    }
    return true;
}

std::vector<int> NeighborIndex::collect_scan(const DeliveryRecord& q, double ro, double rd,
                                             const SBTTEParams& params) const {
    std::vector<int> out;
    for (size_t i = 0; i < entries_.size(); ++i)
        if (matches(entries_[i], q, ro, rd, params.temporal_filter))
            out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> NeighborIndex::collect_grid(const DeliveryRecord& q, double ro, double rd,
                                             const SBTTEParams& params) const {
    auto cell_range = [this](double v, double v0, double span) {
        const std::int64_t lo = static_cast<std::int64_t>(std::floor((v - span - v0) / cell_));
        const std::int64_t hi = static_cast<std::int64_t>(std::floor((v + span - v0) / cell_));
        return std::pair<std::int64_t, std::int64_t>{lo, hi};
    };
    const auto [ola, oha] = cell_range(q.o_lat, lat0_, lat_span_deg(ro));
    const auto [olo, oho] = cell_range(q.o_lon, lon0_, lon_span_deg(ro, q.o_lat));
    const auto [dla, dha] = cell_range(q.d_lat, lat0_, lat_span_deg(rd));
    const auto [dlo, dho] = cell_range(q.d_lon, lon0_, lon_span_deg(rd, q.d_lat));

    auto pack = [](std::int64_t c) {
        return static_cast<std::uint64_t>((c + 32768) & 0xFFFF);
    };

    std::vector<int> out;
    for (std::int64_t a = ola; a <= oha; ++a)
        for (std::int64_t b = olo; b <= oho; ++b)
            for (std::int64_t c = dla; c <= dha; ++c)
                for (std::int64_t d = dlo; d <= dho; ++d) {
                    const std::uint64_t key =
                        (pack(a) << 48) | (pack(b) << 32) | (pack(c) << 16) | pack(d);
                    auto it = buckets_.find(key);
                    if (it == buckets_.end()) continue;
                    for (int idx : it->second)
                        if (matches(entries_[idx], q, ro, rd, params.temporal_filter))
                            out.push_back(idx);
                }
    // canonical record order so aggregation matches the linear scan exactly
    std::sort(out.begin(), out.end());
    return out;
}

double NeighborIndex::predict_from(const DeliveryRecord& q, const SBTTEParams& params,
                                   bool grid) const {
    params.validate();
    double ro = params.radius_o_km, rd = params.radius_d_km;
    std::vector<int> neighbors;
    for (int expansion = 0;; ++expansion) {
        neighbors = grid ? collect_grid(q, ro, rd, params) : collect_scan(q, ro, rd, params);
        if (static_cast<int>(neighbors.size()) >= params.min_neighbors) break;
        if (expansion >= params.max_expansions) break;
        ro *= params.growth;
        rd *= params.growth;
    }
    if (neighbors.empty()) return global_mean_;
    double sum = 0;
    for (int idx : neighbors) sum += entries_[idx].duration;
    return sum / static_cast<double>(neighbors.size());
}

double NeighborIndex::predict(const DeliveryRecord& query, const SBTTEParams& params) const {
    return predict_from(query, params, true);
}

double NeighborIndex::predict_scan(const DeliveryRecord& query, const SBTTEParams& params) const {
    return predict_from(query, params, false);
}

std::vector<double> sbtte_predict_all(const NeighborIndex& index, const Dataset& queries,
                                      const SBTTEParams& params, int threads, bool use_grid) {
    std::vector<double> out(queries.records.size());
    auto work = [&](size_t lo, size_t hi) {
        for (size_t i = lo; i < hi; ++i)
            out[i] = use_grid ? index.predict(queries.records[i], params)
                              : index.predict_scan(queries.records[i], params);
    };
    if (threads <= 1 || queries.records.size() < 64) {
        work(0, queries.records.size());
        return out;
    }
    std::vector<std::thread> pool;
    const size_t chunk = (queries.records.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const size_t lo = std::min(queries.records.size(), t * chunk);
        const size_t hi = std::min(queries.records.size(), lo + chunk);
        if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (std::thread& th : pool) th.join();
    return out;
}

} // namespace odtte
