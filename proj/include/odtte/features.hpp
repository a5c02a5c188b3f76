#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "odtte/errors.hpp"

namespace odtte {

// Civil time in UTC; timestamps are unix seconds throughout.
struct CivilTime {
    int year = 1970, month = 1, day = 1;
    int hour = 0, minute = 0, second = 0;
};

std::int64_t civil_to_unix(const CivilTime& ct);
CivilTime unix_to_civil(std::int64_t t);
int day_of_week(std::int64_t t); // Monday = 0 .. Sunday = 6
std::string format_iso8601(std::int64_t t);
std::int64_t parse_iso8601(const std::string& s); // "YYYY-MM-DDThh:mm:ssZ", throws ParseError

// One last-mile delivery: out-for-delivery scan at the depot, delivered scan
// at the destination, daily weather, duration derived from the two scans.
struct DeliveryRecord {
    std::string depot_id;
    double o_lat = 0, o_lon = 0;
    double d_lat = 0, d_lon = 0;
    std::int64_t ofd_time = 0;
    std::int64_t delivered_time = 0;
    double temp_c = 0;
    double rain_mm = 0;
    double snow_precip_cm = 0;
    double snow_ground_cm = 0;

    double duration_h() const { return static_cast<double>(delivered_time - ofd_time) / 3600.0; }
};

struct BBox {
    double lat_min = 43.40, lat_max = 44.00;
    double lon_min = -80.00, lon_max = -78.90;

    bool contains(double lat, double lon) const {
        return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
    }
};

struct Range {
    double lo = 0, hi = 1;
};

struct FeatureConfig {
    BBox bbox;
    double quant_grid = 0.001;     // ~100 m at Toronto latitudes
    bool quantize_origins = false; // origins are exact depot locations
    Range temp_range{-10.0, 30.0};
    Range rain_range{0.0, 40.0};
    Range snow_precip_range{0.0, 16.0};
    Range snow_ground_range{0.0, 40.0};
    int week_count = 25;
    std::int64_t start_time = 1483315200; // 2017-01-02T00:00:00Z, a Monday

    void validate() const; // ConfigError on degenerate ranges
};

// Fixed, versioned feature order; embedded in checkpoints because a 1D
// convolution is order-sensitive.
inline constexpr const char* kFeatureOrder =
    "o_lon,o_lat,d_lon,d_lat,dist,hour,dow,week,temp,rain,snow_precip,snow_ground";
inline constexpr int kFeatureDim = 12;

using FeatureVector = std::array<double, kFeatureDim>;

// Great-circle distance on a sphere of radius 6371 km.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

// round(value/grid) * grid with half-away-from-zero rounding; idempotent.
double quantize_coord(double value, double grid);

FeatureVector encode_record(const DeliveryRecord& rec, const FeatureConfig& cfg);

} // namespace odtte
