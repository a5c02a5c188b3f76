#pragma once

#include <cstdint>
#include <vector>

#include "odtte/features.hpp"

namespace odtte {

// Synthetic last-mile generator. The functional form is additive:
//   duration = depot_base + dist_coeff * haversine + traffic(hour, dow)
//            + weather_penalty + lognormal noise,   clamped to [0.1, 14] h.
// Coefficient defaults are tuned so a 100k draw lands on the target summary
// moments (mean 3.19 h, median 2.96 h, variance 2.88).
struct SyntheticConfig {
    int n_samples = 10000;
    int n_depots = 72;
    int n_delivery_points = 8373;
    BBox bbox;
    int weeks = 25;
    std::int64_t start_time = 1483315200; // 2017-01-02T00:00:00Z
    std::uint64_t seed = 1;

    // per-depot base offset ~ U(base_min, base_max) hours
    double base_min = 0.10;
    double base_max = 3.35;
    double cluster_sigma_deg = 0.035; // delivery point spread around its depot
    double dist_coeff = 0.085;        // h/km
    double traffic_scale = 0.55;      // scales the hour-of-day profile
    double weekend_discount_sat = 0.30;
    double weekend_discount_sun = 0.55;
    double rain_coeff = 0.012;        // h/mm
    double snow_precip_coeff = 0.045; // h/cm
    double snow_ground_coeff = 0.012; // h/cm
    double noise_log_mu = -1.34;      // additive lognormal noise, log-scale
    double noise_log_sigma = 1.46;
    double clamp_min = 0.1;
    double clamp_max = 14.0;

    std::string digest_text() const; // all coefficients, for provenance
};

struct Provenance {
    bool present = false;
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;
};

struct Dataset {
    std::vector<DeliveryRecord> records;
    Provenance provenance;

    size_t size() const { return records.size(); }
};

Dataset generate_synthetic(const SyntheticConfig& cfg);

// CSV schema (header row required):
// depot_id,o_lat,o_lon,d_lat,d_lon,ofd_time,delivered_time,temp_c,rain_mm,
// snow_precip_cm,snow_ground_cm
// Durations are always recomputed from the two timestamps, never stored.
// An optional leading "# odtte-dataset ..." comment carries provenance.
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

// Seeded uniform shuffle, then the first floor(train_fraction * n) records
// form the training side. Disjoint cover of the input.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

} // namespace odtte
