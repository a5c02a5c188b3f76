#pragma once

#include <unordered_map>
#include <vector>

#include "odtte/arch.hpp"
#include "odtte/dataset.hpp"

namespace odtte {

// Route-free neighbor baseline: average the durations of training trips
// whose origin and destination both fall within the query's radii. The
// source method's actual-distance scaling factor is dropped because actual
// traveled distance is unavailable without a route.
struct SBTTEParams {
    double radius_o_km = 0.5;
    double radius_d_km = 1.0;
    int min_neighbors = 5;
    double growth = 2.0; // radius multiplier per expansion
    int max_expansions = 3;
    bool temporal_filter = false; // same weekday/weekend class, hour +-1

    void validate() const;
};

// Uniform (origin-cell, destination-cell) grid over the training records.
// The grid only accelerates candidate enumeration; the exact haversine
// predicate decides membership, so grid and linear scan agree bit-exactly.
class NeighborIndex {
public:
    NeighborIndex(const Dataset& train, double cell_size_deg);

    double predict(const DeliveryRecord& query, const SBTTEParams& params) const;
    // Exhaustive reference path (the published method's search strategy).
    double predict_scan(const DeliveryRecord& query, const SBTTEParams& params) const;

    double global_mean() const { return global_mean_; }
    size_t size() const { return entries_.size(); }
    size_t bucket_count() const { return buckets_.size(); }
    // Records sharing both cells with r, in insertion order (test hook).
    std::vector<int> bucket_members(const DeliveryRecord& r) const;

private:
    struct Entry {
        double o_lat, o_lon, d_lat, d_lon;
        double duration;
        int hour;
        int dow;
    };

    std::uint64_t key_for(double o_lat, double o_lon, double d_lat, double d_lon) const;
    std::vector<int> collect_grid(const DeliveryRecord& q, double ro, double rd,
                                  const SBTTEParams& params) const;
    std::vector<int> collect_scan(const DeliveryRecord& q, double ro, double rd,
                                  const SBTTEParams& params) const;
    double predict_from(const DeliveryRecord& q, const SBTTEParams& params, bool grid) const;
    bool matches(const Entry& e, const DeliveryRecord& q, double ro, double rd,
                 bool temporal) const;

    std::vector<Entry> entries_;
    double cell_;
    double lat0_ = 0, lon0_ = 0;
    std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
    double global_mean_ = 0;
};

// Per-query prediction over a whole set; queries are independent, so the
// output is identical for any thread count.
std::vector<double> sbtte_predict_all(const NeighborIndex& index, const Dataset& queries,
                                      const SBTTEParams& params, int threads = 1,
                                      bool use_grid = true);

// MLP benchmarks: 2 and 5 ReLU-activated 50-unit layers.
inline ModelSpec mlp1_spec() { return ModelSpec::mlp(2, 50); }
inline ModelSpec mlp2_spec() { return ModelSpec::mlp(5, 50); }

} // namespace odtte
