#pragma once

#include <cstdint>
#include <vector>

#include "odtte/arch.hpp"
#include "odtte/dataset.hpp"

namespace odtte {

struct TrainConfig {
    double initial_lr = 1e-4;
    int lr_halving_period = 40; // epochs per halving
    int batch_size = 64;
    int patience = 25; // early stop after this many non-improving epochs
    int max_epochs = 500;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double target_train_mse = 0.0; // > 0: stop once the train loss drops below
    bool verbose = false;

    void validate() const;
};

struct EpochStats {
    double train_mse = 0;
    double val_mse = 0;
    double lr = 0;
    double seconds = 0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = 0; // 1-indexed; 0 = never improved
    double best_val_mse = 0;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t step = 0;

    static AdamState for_params(const std::vector<Tensor*>& params);
};

// One bias-corrected Adam update over all parameter blocks. Throws
// NumericError naming the offending block on a non-finite gradient.
void adam_step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, double lr, const TrainConfig& cfg,
               const std::vector<std::string>& names);

// initial_lr * 0.5^floor(epoch / halving_period); epoch is 0-indexed.
double lr_at(int epoch, const TrainConfig& cfg);

// True once the trailing `patience` entries are all >= the best value seen
// before them (strict improvement resets the counter).
bool early_stop(const std::vector<double>& val_losses, int patience);

struct EncodedSet {
    std::int64_t n = 0;
    std::vector<double> x; // row-major n x 12
    std::vector<double> y; // duration targets, hours
};

EncodedSet encode_dataset(const Dataset& ds, const FeatureConfig& cfg);

// Deterministic batched evaluation MSE (fixed order and batching).
double evaluate_mse(const Model& model, const EncodedSet& set, int batch = 256);

// Mini-batch Adam on MSE with per-epoch seeded shuffling, lr halving,
// early stopping, and best-epoch parameter restore.
TrainHistory train(Model& model, const EncodedSet& train_set, const EncodedSet& val_set,
                   const TrainConfig& cfg);

// epoch,train_mse,val_mse,lr,seconds
void write_history_csv(const TrainHistory& h, const std::string& path);

} // namespace odtte
