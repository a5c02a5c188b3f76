#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "odtte/arch.hpp"
#include "odtte/dataset.hpp"
#include "odtte/metrics.hpp"

namespace odtte {

enum class BreakdownDim { Depot, OdDistanceKm, Hour, Week, Dow, TargetHour };

BreakdownDim parse_dimension(const std::string& s); // throws ContractError
std::string dimension_name(BreakdownDim d);

struct BreakdownRow {
    std::string bin;
    std::int64_t order = 0; // numeric sort key where applicable
    std::int64_t n = 0;
    double mape = 0, mare = 0, mse = 0, mae = 0;
    double depot_lat = 0, depot_lon = 0; // map-export metadata (depot dimension)
};

struct BreakdownTable {
    BreakdownDim dimension;
    bool has_mse = false; // emitted for the target dimension
    std::vector<BreakdownRow> rows;
};

BreakdownTable error_breakdown(const Dataset& records, std::span<const double> targets,
                               std::span<const double> predictions, BreakdownDim dim,
                               const FeatureConfig& cfg);

void write_breakdown_csv(const BreakdownTable& table, const std::string& path);
// depot_id,lat,lon,mape_pct,n — for external map plotting
void write_depot_map_csv(const BreakdownTable& table, const std::string& path);

// Linear undercomplete autoencoder over the frozen conv trunk's outputs.
// No biases and mean-centered inputs, so the encoder spans the same
// subspace as the top-2 principal components at the reconstruction optimum.
struct AeConfig {
    double lr = 0.01;
    int max_epochs = 4000;
    int patience = 200;
    std::uint64_t seed = 1;
};

struct Centroid {
    double c1 = 0, c2 = 0;
    std::int64_t n = 0;
};

struct Projection2D {
    std::vector<std::array<double, 2>> points; // per sample, encoder output
    std::vector<int> hour;                     // per sample ofd hour
    std::vector<int> dow;
    std::map<int, Centroid> hour_centroids;
    std::map<int, Centroid> dow_centroids;
    double reconstruction_mse = 0;
};

// Fit encoder (F->2) / decoder (2->F) on mean-centered rows by full-batch
// Adam on the reconstruction MSE. Returns the best-loss weights.
struct AeFit {
    Tensor encoder; // (F,1,2)
    Tensor decoder; // (2,1,F)
    std::vector<double> column_mean;
    double reconstruction_mse = 0;
};
AeFit fit_linear_autoencoder(const std::vector<std::vector<double>>& rows, const AeConfig& cfg);

Projection2D project_2d(const Model& model, const Dataset& data, const FeatureConfig& fcfg,
                        const AeConfig& acfg);

void write_projection_csv(const Projection2D& proj, const std::string& path);
void write_centroid_csv(const std::map<int, Centroid>& centroids, const std::string& label,
                        const std::string& path);

// Per-sample prediction artifacts shared by neural and baseline runs.
void write_predictions_csv(const std::string& path, std::span<const double> targets,
                           std::span<const double> predictions);
struct PredictionsFile {
    std::vector<std::int64_t> ids;
    std::vector<double> targets;
    std::vector<double> predictions;
};
PredictionsFile load_predictions_csv(const std::string& path);

} // namespace odtte
