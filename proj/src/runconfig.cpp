#include "odtte/runconfig.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "odtte/util.hpp"

namespace odtte {

KvConfig KvConfig::defaults() {
    KvConfig kv;
    kv.kv_ = {
        {"seed", "1"},
        {"out", "."},
        {"data.n", "10000"},
        {"data.depots", "72"},
        {"data.points", "8373"},
        {"data.weeks", "25"},
        {"data.start", "2017-01-02T00:00:00Z"},
        {"data.base_min", "0.1"},
        {"data.base_max", "3.35"},
        {"data.cluster_sigma", "0.035"},
        {"data.dist_coeff", "0.085"},
        {"data.traffic_scale", "0.55"},
        {"data.weekend_sat", "0.3"},
        {"data.weekend_sun", "0.55"},
        {"data.rain_coeff", "0.012"},
        {"data.snow_precip_coeff", "0.045"},
        {"data.snow_ground_coeff", "0.012"},
        {"data.noise_mu", "-1.34"},
        {"data.noise_sigma", "1.46"},
        {"bbox.lat_min", "43.4"},
        {"bbox.lat_max", "44.0"},
        {"bbox.lon_min", "-80.0"},
        {"bbox.lon_max", "-78.9"},
        {"features.quant_grid", "0.001"},
        {"features.quantize_origins", "0"},
        {"features.week_count", "25"},
        {"features.snow_ground_max", "40"},
        {"split.fraction", "0.7"},
        {"model.family", "resnet"},
        {"model.depth", "8"},
        {"model.se", "0"},
        {"model.se_ratio", "16"},
        {"train.lr", "0.0001"},
        {"train.halving", "40"},
        {"train.batch", "64"},
        {"train.patience", "25"},
        {"train.max_epochs", "500"},
        {"train.target_mse", "0"},
        {"train.verbose", "0"},
        {"sbtte.radius_o", "0.5"},
        {"sbtte.radius_d", "1.0"},
        {"sbtte.k", "5"},
        {"sbtte.growth", "2.0"},
        {"sbtte.expansions", "3"},
        {"sbtte.temporal", "0"},
        {"sbtte.cell", "0.02"},
        {"ae.lr", "0.01"},
        {"ae.epochs", "4000"},
        {"ae.patience", "200"},
        {"eval.p", "0.9"},
    };
    return kv;
}

KvConfig KvConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ParseError("cannot open config: " + path);
    KvConfig kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
        kv.kv_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

std::string KvConfig::get_str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end())
        throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

std::int64_t KvConfig::get_int(const std::string& key) const {
    try {
        return parse_int(get_str(key));
    } catch (const ParseError& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

double KvConfig::get_double(const std::string& key) const {
    try {
        return parse_double(get_str(key));
    } catch (const ParseError& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

bool KvConfig::get_bool(const std::string& key) const {
    const std::string v = get_str(key);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

void KvConfig::merge(const KvConfig& winner) {
    for (const auto& [k, v] : winner.kv_) kv_[k] = v;
}

std::string KvConfig::resolved_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << "=" << v << "\n";
    return os.str();
}

static BBox bbox_from(const KvConfig& kv) {
    BBox bb;
    bb.lat_min = kv.get_double("bbox.lat_min");
    bb.lat_max = kv.get_double("bbox.lat_max");
    bb.lon_min = kv.get_double("bbox.lon_min");
    bb.lon_max = kv.get_double("bbox.lon_max");
    return bb;
}

FeatureConfig feature_config_from(const KvConfig& kv) {
    FeatureConfig cfg;
    cfg.bbox = bbox_from(kv);
    cfg.quant_grid = kv.get_double("features.quant_grid");
    cfg.quantize_origins = kv.get_bool("features.quantize_origins");
    cfg.week_count = static_cast<int>(kv.get_int("features.week_count"));
    cfg.snow_ground_range.hi = kv.get_double("features.snow_ground_max");
    cfg.start_time = parse_iso8601(kv.get_str("data.start"));
    cfg.validate();
    return cfg;
}

SyntheticConfig synthetic_config_from(const KvConfig& kv) {
    SyntheticConfig cfg;
    cfg.n_samples = static_cast<int>(kv.get_int("data.n"));
    cfg.n_depots = static_cast<int>(kv.get_int("data.depots"));
    cfg.n_delivery_points = static_cast<int>(kv.get_int("data.points"));
    cfg.bbox = bbox_from(kv);
    cfg.weeks = static_cast<int>(kv.get_int("data.weeks"));
    cfg.start_time = parse_iso8601(kv.get_str("data.start"));
    cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
    cfg.base_min = kv.get_double("data.base_min");
    cfg.base_max = kv.get_double("data.base_max");
    cfg.cluster_sigma_deg = kv.get_double("data.cluster_sigma");
    cfg.dist_coeff = kv.get_double("data.dist_coeff");
    cfg.traffic_scale = kv.get_double("data.traffic_scale");
    cfg.weekend_discount_sat = kv.get_double("data.weekend_sat");
    cfg.weekend_discount_sun = kv.get_double("data.weekend_sun");
    cfg.rain_coeff = kv.get_double("data.rain_coeff");
    cfg.snow_precip_coeff = kv.get_double("data.snow_precip_coeff");
    cfg.snow_ground_coeff = kv.get_double("data.snow_ground_coeff");
    cfg.noise_log_mu = kv.get_double("data.noise_mu");
    cfg.noise_log_sigma = kv.get_double("data.noise_sigma");
    return cfg;
}

TrainConfig train_config_from(const KvConfig& kv) {
    TrainConfig cfg;
    cfg.initial_lr = kv.get_double("train.lr");
    cfg.lr_halving_period = static_cast<int>(kv.get_int("train.halving"));
    cfg.batch_size = static_cast<int>(kv.get_int("train.batch"));
    cfg.patience = static_cast<int>(kv.get_int("train.patience"));
    cfg.max_epochs = static_cast<int>(kv.get_int("train.max_epochs"));
    cfg.target_train_mse = kv.get_double("train.target_mse");
    cfg.verbose = kv.get_bool("train.verbose");
    cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
    cfg.validate();
    return cfg;
}

SBTTEParams sbtte_params_from(const KvConfig& kv) {
    SBTTEParams p;
    p.radius_o_km = kv.get_double("sbtte.radius_o");
    p.radius_d_km = kv.get_double("sbtte.radius_d");
    p.min_neighbors = static_cast<int>(kv.get_int("sbtte.k"));
    p.growth = kv.get_double("sbtte.growth");
    p.max_expansions = static_cast<int>(kv.get_int("sbtte.expansions"));
    p.temporal_filter = kv.get_bool("sbtte.temporal");
    p.validate();
    return p;
}

AeConfig ae_config_from(const KvConfig& kv) {
    AeConfig cfg;
    cfg.lr = kv.get_double("ae.lr");
    cfg.max_epochs = static_cast<int>(kv.get_int("ae.epochs"));
    cfg.patience = static_cast<int>(kv.get_int("ae.patience"));
    cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
    return cfg;
}

ModelSpec model_spec_from(const KvConfig& kv) {
    const Family family = parse_family(kv.get_str("model.family"));
    if (family == Family::MLP) {
        const int depth = static_cast<int>(kv.get_int("model.depth"));
        if (depth != 2 && depth != 5)
            throw ConfigError("mlp depth must be 2 (MLP-1) or 5 (MLP-2)");
        return ModelSpec::mlp(depth, 50);
    }
    return ModelSpec::conv(family, static_cast<int>(kv.get_int("model.depth")),
                           kv.get_bool("model.se"), static_cast<int>(kv.get_int("model.se_ratio")));
}

int env_thread_cap() {
    const char* v = std::getenv("ODTTE_THREADS");
    if (!v) return 1;
    try {
        const std::int64_t n = parse_int(v);
        return static_cast<int>(std::clamp<std::int64_t>(n, 1, 64));
    } catch (const ParseError&) {
        return 1;
    }
}

} // namespace odtte
