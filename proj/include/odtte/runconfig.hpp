#pragma once

#include <map>
#include <string>

#include "odtte/analysis.hpp"
#include "odtte/baselines.hpp"
#include "odtte/dataset.hpp"
#include "odtte/training.hpp"

namespace odtte {

// Flat key=value run configuration ('#' comments). Later merges win; every
// run writes its fully resolved form next to its outputs.
class KvConfig {
public:
    static KvConfig defaults();
    static KvConfig from_file(const std::string& path);

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_str(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    void merge(const KvConfig& winner);
    std::string resolved_text() const; // sorted key=value lines

private:
    std::map<std::string, std::string> kv_;
};

FeatureConfig feature_config_from(const KvConfig& kv);
SyntheticConfig synthetic_config_from(const KvConfig& kv); // seed from "seed"
TrainConfig train_config_from(const KvConfig& kv);
SBTTEParams sbtte_params_from(const KvConfig& kv);
AeConfig ae_config_from(const KvConfig& kv);
ModelSpec model_spec_from(const KvConfig& kv);

int env_thread_cap(); // ODTTE_THREADS, default 1

} // namespace odtte
