#include "odtte/features.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace odtte {

namespace {
constexpr double kEarthRadiusKm = 6371.0;
constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }
} // namespace

std::int64_t civil_to_unix(const CivilTime& ct) {
    using namespace std::chrono;
    const year_month_day ymd{year{ct.year}, month{static_cast<unsigned>(ct.month)},
                             day{static_cast<unsigned>(ct.day)}};
    if (!ymd.ok())
        throw ParseError("invalid calendar date " + std::to_string(ct.year) + "-" +
                         std::to_string(ct.month) + "-" + std::to_string(ct.day));
    const sys_days sd{ymd};
    return sd.time_since_epoch().count() * 86400LL + ct.hour * 3600LL + ct.minute * 60LL +
           ct.second;
}

CivilTime unix_to_civil(std::int64_t t) {
    using namespace std::chrono;
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    CivilTime ct;
    ct.year = static_cast<int>(ymd.year());
    ct.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
    ct.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
    ct.hour = static_cast<int>(rem / 3600);
    ct.minute = static_cast<int>((rem % 3600) / 60);
    ct.second = static_cast<int>(rem % 60);
    return ct;
}

int day_of_week(std::int64_t t) {
    std::int64_t days = t / 86400;
    if (t % 86400 < 0) days -= 1;
    // 1970-01-01 was a Thursday (Monday=0 -> 3)
    return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

std::string format_iso8601(std::int64_t t) {
    const CivilTime ct = unix_to_civil(t);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", ct.year, ct.month, ct.day,
                  ct.hour, ct.minute, ct.second);
    return buf;
}

std::int64_t parse_iso8601(const std::string& s) {
    CivilTime ct;
    char sep = 0, zone = 0;
    const int got = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%c", &ct.year, &ct.month,
                                &ct.day, &sep, &ct.hour, &ct.minute, &ct.second, &zone);
    if (got < 7 || (sep != 'T' && sep != ' ') || (got == 8 && zone != 'Z'))
        throw ParseError("malformed timestamp '" + s + "' (expected YYYY-MM-DDThh:mm:ssZ)");
    if (ct.hour > 23 || ct.minute > 59 || ct.second > 60)
        throw ParseError("malformed timestamp '" + s + "' (time of day out of range)");
    return civil_to_unix(ct);
}

void FeatureConfig::validate() const {
    auto check = [](const Range& r, const char* name) {
        if (!(r.hi > r.lo))
            throw ConfigError(std::string("degenerate range for ") + name);
    };
    if (!(bbox.lat_max > bbox.lat_min) || !(bbox.lon_max > bbox.lon_min))
        throw ConfigError("degenerate bounding box");
    check(temp_range, "temp");
    check(rain_range, "rain");
    check(snow_precip_range, "snow_precip");
    check(snow_ground_range, "snow_ground");
    if (quant_grid <= 0)
        throw ConfigError("quantization grid must be positive");
    if (week_count < 2)
        throw ConfigError("week_count must be at least 2");
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
    if (std::fabs(lat1) > 90.0 || std::fabs(lat2) > 90.0)
        throw DomainError("haversine latitude outside [-90,90]");
    const double phi1 = deg2rad(lat1), phi2 = deg2rad(lat2);
    const double dphi = deg2rad(lat2 - lat1);
    const double dlam = deg2rad(lon2 - lon1);
    const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                     std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
    const double c = 2.0 * std::atan2(std::sqrt(a), std::sqrt(std::max(0.0, 1.0 - a)));
    return kEarthRadiusKm * c;
}

double quantize_coord(double value, double grid) {
    if (grid <= 0)
        throw ContractError("quantize_coord grid must be positive");
    // round half away from zero so the map is idempotent and sign-symmetric
    return std::round(value / grid) * grid;
}

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

double minmax(double v, const Range& r) { return clamp01((v - r.lo) / (r.hi - r.lo)); }

} // namespace

FeatureVector encode_record(const DeliveryRecord& rec, const FeatureConfig& cfg) {
    const BBox& bb = cfg.bbox;
    auto require_inside = [&](double lat, double lon, const char* what) {
        if (lat < bb.lat_min || lat > bb.lat_max)
            throw DomainError(std::string(what) + " latitude " + std::to_string(lat) +
                              " outside bounding box");
        if (lon < bb.lon_min || lon > bb.lon_max)
            throw DomainError(std::string(what) + " longitude " + std::to_string(lon) +
                              " outside bounding box");
    };
    require_inside(rec.o_lat, rec.o_lon, "origin");
    require_inside(rec.d_lat, rec.d_lon, "destination");

    auto norm_lat = [&](double lat) { return (lat - bb.lat_min) / (bb.lat_max - bb.lat_min); };
    auto norm_lon = [&](double lon) { return (lon - bb.lon_min) / (bb.lon_max - bb.lon_min); };
    // quantization may step just past the box edge; clamp back inside
    auto quant = [&](double v, double lo, double hi) {
        return std::min(hi, std::max(lo, quantize_coord(v, cfg.quant_grid)));
    };

    double o_lat = rec.o_lat, o_lon = rec.o_lon;
    if (cfg.quantize_origins) {
        o_lat = quant(o_lat, bb.lat_min, bb.lat_max);
        o_lon = quant(o_lon, bb.lon_min, bb.lon_max);
    }
    const double d_lat = quant(rec.d_lat, bb.lat_min, bb.lat_max);
    const double d_lon = quant(rec.d_lon, bb.lon_min, bb.lon_max);

    const double diag = haversine_km(bb.lat_min, bb.lon_min, bb.lat_max, bb.lon_max);
    const double dist = haversine_km(rec.o_lat, rec.o_lon, rec.d_lat, rec.d_lon);

    const CivilTime ct = unix_to_civil(rec.ofd_time);
    const double hour_n = (ct.hour + ct.minute / 60.0) / 24.0;
    const double dow_n = day_of_week(rec.ofd_time) / 6.0;

    const std::int64_t week_idx = (rec.ofd_time - cfg.start_time) / (7 * 86400);
    const double week_n = clamp01(static_cast<double>(week_idx) / (cfg.week_count - 1));

    return FeatureVector{
        norm_lon(o_lon),
        norm_lat(o_lat),
        norm_lon(d_lon),
        norm_lat(d_lat),
        clamp01(dist / diag),
        hour_n,
        dow_n,
        week_n,
        minmax(rec.temp_c, cfg.temp_range),
        minmax(rec.rain_mm, cfg.rain_range),
        minmax(rec.snow_precip_cm, cfg.snow_precip_range),
        minmax(rec.snow_ground_cm, cfg.snow_ground_range),
    };
}

} // namespace odtte
