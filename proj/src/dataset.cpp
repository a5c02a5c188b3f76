#include "odtte/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "odtte/util.hpp"

namespace odtte {

std::string SyntheticConfig::digest_text() const {
    std::ostringstream os;
    os << "n=" << n_samples << ";depots=" << n_depots << ";points=" << n_delivery_points
       << ";bbox=" << fmt_double(bbox.lat_min) << "," << fmt_double(bbox.lat_max) << ","
       << fmt_double(bbox.lon_min) << "," << fmt_double(bbox.lon_max) << ";weeks=" << weeks
       << ";start=" << start_time << ";base=" << fmt_double(base_min) << ","
       << fmt_double(base_max) << ";cluster=" << fmt_double(cluster_sigma_deg)
       << ";dist=" << fmt_double(dist_coeff) << ";traffic=" << fmt_double(traffic_scale)
       << ";wkend=" << fmt_double(weekend_discount_sat) << "," << fmt_double(weekend_discount_sun)
       << ";weather=" << fmt_double(rain_coeff) << "," << fmt_double(snow_precip_coeff) << ","
       << fmt_double(snow_ground_coeff) << ";noise=" << fmt_double(noise_log_mu) << ","
       << fmt_double(noise_log_sigma) << ";clamp=" << fmt_double(clamp_min) << ","
       << fmt_double(clamp_max);
    return os.str();
}

namespace {

// Platform-independent bounded draw (rejection sampling).
template <class Rng> std::uint64_t bounded(Rng& rng, std::uint64_t n) {
    const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= lim);
    return v % n;
}

// Added hours per out-for-delivery hour; morning rush peaks around 8-9 am.
constexpr double kTrafficProfile[24] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.05, 0.3, 0.7,
                                        1.0, 0.9, 0.6, 0.5, 0.5, 0.4,  0.3, 0.25,
                                        0.2, 0.1, 0.0, 0.0, 0.0, 0.0,  0.0, 0.0};

// Sampling weights for the ofd hour: most parcels leave in the morning,
// peaking at 9 am, sparse before 7 am and after noon.
constexpr int kHourWeights[24] = {0, 0, 0, 0, 0, 2, 6, 20, 44, 52, 32, 18,
                                  12, 6, 4, 2, 1, 0, 0, 0, 0, 0, 0, 0};

struct DayWeather {
    double temp_c, rain_mm, snow_precip_cm, snow_ground_cm;
};

std::vector<DayWeather> make_weather(const SyntheticConfig& cfg, std::uint64_t seed) {
    const int days = cfg.weeks * 7;
    std::mt19937_64 rng(seed);
    std::vector<DayWeather> table(static_cast<size_t>(days));
    double ground = 8.0; // snowpack carried into January
    for (int d = 0; d < days; ++d) {
        const double s = days > 1 ? static_cast<double>(d) / (days - 1) : 0.0;
        double temp = -6.0 + 28.0 * s + normal01(rng) * 3.5;
        temp = std::clamp(temp, -10.0, 30.0);

        double rain = 0.0;
        if (uniform01(rng) < 0.22 + 0.18 * s)
            rain = std::min(40.0, -std::log(1.0 - uniform01(rng)) * (3.0 + 4.0 * s));

        double snow = 0.0;
        if (s < 0.45 && uniform01(rng) < 0.38 * (1.0 - s / 0.45))
            snow = std::min(16.0, -std::log(1.0 - uniform01(rng)) * 2.6);

        const double melt = 0.4 + 0.45 * std::max(0.0, temp);
        ground = std::clamp(ground + 0.8 * snow - melt, 0.0, 40.0);

        table[d] = DayWeather{temp, rain, snow, ground};
    }
    return table;
}

} // namespace

Dataset generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_samples < 0 || cfg.n_depots < 1 || cfg.n_delivery_points < 1)
        throw ContractError("generate_synthetic: invalid sample/depot/point counts");
    if (cfg.weeks < 1 || !(cfg.base_max > cfg.base_min))
        throw ConfigError("generate_synthetic: invalid weeks or base offset range");

    Dataset ds;
    ds.provenance.present = true;
    ds.provenance.seed = cfg.seed;
    ds.provenance.config_digest = fnv1a(cfg.digest_text());
    if (cfg.n_samples == 0) return ds;

    const std::uint64_t data_seed = derive_seed(cfg.seed, "data");

    // depots: uniform in the box, with a wide-spread base offset each
    std::mt19937_64 setup(derive_seed(data_seed, "depots"));
    const BBox& bb = cfg.bbox;
    std::vector<double> depot_lat(cfg.n_depots), depot_lon(cfg.n_depots), depot_base(cfg.n_depots);
    for (int i = 0; i < cfg.n_depots; ++i) {
        depot_lat[i] = uniform_range(setup, bb.lat_min, bb.lat_max);
        depot_lon[i] = uniform_range(setup, bb.lon_min, bb.lon_max);
        // stratified base offsets: the mixture shape is seed-stable, only the
        // assignment of offsets to depots is shuffled
        depot_base[i] = cfg.base_min + (i + 0.5) * (cfg.base_max - cfg.base_min) / cfg.n_depots;
    }
    for (int i = cfg.n_depots - 1; i > 0; --i)
        std::swap(depot_base[i], depot_base[bounded(setup, static_cast<std::uint64_t>(i) + 1)]);

    // delivery points clustered around their depot (round-robin assignment)
    std::vector<double> point_lat(cfg.n_delivery_points), point_lon(cfg.n_delivery_points);
    std::vector<int> point_depot(cfg.n_delivery_points);
    for (int j = 0; j < cfg.n_delivery_points; ++j) {
        const int dep = j % cfg.n_depots;
        point_depot[j] = dep;
        double lat = depot_lat[dep] + normal01(setup) * cfg.cluster_sigma_deg;
        double lon = depot_lon[dep] + normal01(setup) * cfg.cluster_sigma_deg * 1.35;
        point_lat[j] = std::clamp(lat, bb.lat_min, bb.lat_max);
        point_lon[j] = std::clamp(lon, bb.lon_min, bb.lon_max);
    }

    // per-depot query weights, busiest-first exponential falloff
    std::vector<double> depot_cdf(cfg.n_depots);
    double acc = 0.0;
    for (int i = 0; i < cfg.n_depots; ++i) {
        acc += std::exp(-0.04 * i);
        depot_cdf[i] = acc;
    }
    for (double& v : depot_cdf) v /= acc;

    // pin the weight-averaged base offset at the range midpoint so the
    // aggregate duration moments do not drift with the depot draw
    {
        double wbase = 0.0, prev = 0.0;
        for (int i = 0; i < cfg.n_depots; ++i) {
            wbase += (depot_cdf[i] - prev) * depot_base[i];
            prev = depot_cdf[i];
        }
        const double shift = 0.5 * (cfg.base_min + cfg.base_max) - wbase;
        for (double& b : depot_base) b = std::max(0.05, b + shift);
    }

    // per-depot point lists
    std::vector<std::vector<int>> depot_points(cfg.n_depots);
    for (int j = 0; j < cfg.n_delivery_points; ++j)
        depot_points[point_depot[j]].push_back(j);

    const std::vector<DayWeather> weather = make_weather(cfg, derive_seed(data_seed, "weather"));

    int hour_total = 0;
    for (int w : kHourWeights) hour_total += w;

    ds.records.reserve(static_cast<size_t>(cfg.n_samples));
    std::int64_t nonpositive = 0;
    for (int i = 0; i < cfg.n_samples; ++i) {
        // per-record engine: generation is shardable without changing output
        std::mt19937_64 rng(splitmix64(data_seed + 0x9e3779b97f4a7c15ULL * (i + 1)));

        int dep = static_cast<int>(std::lower_bound(depot_cdf.begin(), depot_cdf.end(),
                                                    uniform01(rng)) -
                                   depot_cdf.begin());
        if (dep >= cfg.n_depots) dep = cfg.n_depots - 1;
        if (depot_points[dep].empty()) dep = 0;
        const int pt = depot_points[dep][bounded(rng, depot_points[dep].size())];

        const int day = static_cast<int>(bounded(rng, static_cast<std::uint64_t>(cfg.weeks) * 7));
        int hour = 9;
        {
            int pick = static_cast<int>(bounded(rng, static_cast<std::uint64_t>(hour_total)));
            for (int h = 0; h < 24; ++h) {
                pick -= kHourWeights[h];
                if (pick < 0) {
                    hour = h;
                    break;
                }
            }
        }
        const int minute = static_cast<int>(bounded(rng, 60));
        const int second = static_cast<int>(bounded(rng, 60));
        const std::int64_t ofd =
            cfg.start_time + static_cast<std::int64_t>(day) * 86400 + hour * 3600 + minute * 60 + second;

        const DayWeather& w = weather[day];
        const double dist = haversine_km(depot_lat[dep], depot_lon[dep], point_lat[pt], point_lon[pt]);
        const int dow = day_of_week(ofd);
        double traffic = cfg.traffic_scale * kTrafficProfile[hour];
        if (dow == 5) traffic -= cfg.weekend_discount_sat;
        if (dow == 6) traffic -= cfg.weekend_discount_sun;
        const double weather_pen = cfg.rain_coeff * w.rain_mm +
                                   cfg.snow_precip_coeff * w.snow_precip_cm +
                                   cfg.snow_ground_coeff * w.snow_ground_cm;
        const double noise = std::exp(cfg.noise_log_mu + cfg.noise_log_sigma * normal01(rng));
        const double raw = depot_base[dep] + cfg.dist_coeff * dist + traffic + weather_pen + noise;
        if (raw <= 0.0) ++nonpositive;
        const double duration = std::clamp(raw, cfg.clamp_min, cfg.clamp_max);

        DeliveryRecord rec;
        char id[8];
        std::snprintf(id, sizeof(id), "D%03d", dep);
        rec.depot_id = id;
        rec.o_lat = depot_lat[dep];
        rec.o_lon = depot_lon[dep];
        rec.d_lat = point_lat[pt];
        rec.d_lon = point_lon[pt];
        rec.ofd_time = ofd;
        rec.delivered_time = ofd + std::llround(duration * 3600.0);
        rec.temp_c = w.temp_c;
        rec.rain_mm = w.rain_mm;
        rec.snow_precip_cm = w.snow_precip_cm;
        rec.snow_ground_cm = w.snow_ground_cm;
        ds.records.push_back(std::move(rec));
    }

    if (nonpositive * 10 > cfg.n_samples)
        throw ConfigError("generator calibration error: " + std::to_string(nonpositive) + "/" +
                          std::to_string(cfg.n_samples) + " draws nonpositive before clamping");
    return ds;
}

static constexpr const char* kCsvHeader =
    "depot_id,o_lat,o_lon,d_lat,d_lon,ofd_time,delivered_time,temp_c,rain_mm,snow_precip_cm,"
    "snow_ground_cm";

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary); // binary: byte-stable newlines
    if (!os)
        throw ParseError("cannot open for writing: " + path);
    if (ds.provenance.present)
        os << "# odtte-dataset seed=" << ds.provenance.seed
           << " config_digest=" << ds.provenance.config_digest << "\n";
    os << kCsvHeader << "\n";
    for (const DeliveryRecord& r : ds.records) {
        os << r.depot_id << ',' << fmt_double(r.o_lat) << ',' << fmt_double(r.o_lon) << ','
           << fmt_double(r.d_lat) << ',' << fmt_double(r.d_lon) << ','
           << format_iso8601(r.ofd_time) << ',' << format_iso8601(r.delivered_time) << ','
           << fmt_double(r.temp_c) << ',' << fmt_double(r.rain_mm) << ','
           << fmt_double(r.snow_precip_cm) << ',' << fmt_double(r.snow_ground_cm) << "\n";
    }
    if (!os)
        throw ParseError("write failed: " + path);
}

Dataset load_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ParseError("cannot open: " + path);

    Dataset ds;
    std::string line;
    int lineno = 0;

    // optional provenance comment(s) before the header
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("#", 0) == 0) {
            std::istringstream ls(line);
            std::string tok;
            while (ls >> tok) {
                if (tok.rfind("seed=", 0) == 0) {
                    ds.provenance.seed = static_cast<std::uint64_t>(parse_int(tok.substr(5)));
                    ds.provenance.present = true;
                } else if (tok.rfind("config_digest=", 0) == 0) {
                    ds.provenance.config_digest =
                        static_cast<std::uint64_t>(parse_int(tok.substr(14)));
                }
            }
            continue;
        }
        break; // header row
    }
    if (line.empty() && !is)
        throw ParseError(path + ": missing header row");

    const std::vector<std::string> expected = split_csv_line(kCsvHeader);
    const std::vector<std::string> header = split_csv_line(line);
    std::vector<int> col_of(expected.size(), -1);
    for (size_t e = 0; e < expected.size(); ++e) {
        for (size_t h = 0; h < header.size(); ++h)
            if (trim(header[h]) == expected[e]) {
                col_of[e] = static_cast<int>(h);
                break;
            }
        if (col_of[e] < 0)
            throw ParseError(path + ": missing column '" + expected[e] + "'");
    }
    for (size_t h = 0; h < header.size(); ++h) {
        const std::string name = trim(header[h]);
        if (std::find(expected.begin(), expected.end(), name) == expected.end())
            std::cerr << "warning: " << path << ": ignoring unknown column '" << name << "'\n";
    }

    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() < header.size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(f.size()));
        auto field = [&](size_t e) -> const std::string& { return f[col_of[e]]; };
        DeliveryRecord r;
        try {
            r.depot_id = field(0);
            r.o_lat = parse_double(field(1));
            r.o_lon = parse_double(field(2));
            r.d_lat = parse_double(field(3));
            r.d_lon = parse_double(field(4));
            r.ofd_time = parse_iso8601(field(5));
            r.delivered_time = parse_iso8601(field(6));
            r.temp_c = parse_double(field(7));
            r.rain_mm = parse_double(field(8));
            r.snow_precip_cm = parse_double(field(9));
            r.snow_ground_cm = parse_double(field(10));
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (r.delivered_time <= r.ofd_time)
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": delivered_time must be after ofd_time");
        ds.records.push_back(std::move(r));
    }
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (ds.records.empty())
        throw ContractError("split: empty dataset");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ContractError("split: train fraction must be in (0,1)");

    const size_t n = ds.records.size();
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(derive_seed(seed, "split"));
    for (size_t i = n - 1; i > 0; --i) {
        const size_t j = bounded(rng, i + 1);
        std::swap(idx[i], idx[j]);
    }

    // floor on the train side; epsilon guards against 0.7*10 -> 6.999...
    const size_t n_train = static_cast<size_t>(std::floor(train_fraction * n + 1e-9));
    std::pair<Dataset, Dataset> out;
    out.first.provenance = ds.provenance;
    out.second.provenance = ds.provenance;
    out.first.records.reserve(n_train);
    out.second.records.reserve(n - n_train);
    for (size_t i = 0; i < n; ++i)
        (i < n_train ? out.first : out.second).records.push_back(ds.records[idx[i]]);
    return out;
}

} // namespace odtte
