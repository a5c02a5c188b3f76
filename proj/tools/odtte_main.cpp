// Batch front door: gen-data | train | evaluate | predict | baseline |
// analyze | project | depth-sweep. Every run writes its resolved config
// next to its outputs; identical configs and seeds give byte-identical
// output files.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "odtte/analysis.hpp"
#include "odtte/baselines.hpp"
#include "odtte/runconfig.hpp"
#include "odtte/training.hpp"
#include "odtte/util.hpp"

namespace fs = std::filesystem;
using namespace odtte;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value config file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "master seed (sub-seeds are derived per component)");
    cmd->add_option("--set", args.sets, "override a config key, e.g. --set train.batch=32");
}

KvConfig resolve(const CommonArgs& args) {
    KvConfig kv = KvConfig::defaults();
    if (!args.config_path.empty()) kv.merge(KvConfig::from_file(args.config_path));
    for (const std::string& s : args.sets) {
        const size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + s + "'");
        kv.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    if (args.seed >= 0) kv.set("seed", std::to_string(args.seed));
    if (!args.out_dir.empty()) kv.set("out", args.out_dir);
    return kv;
}

fs::path prepare_out(const KvConfig& kv) {
    const fs::path out = kv.get_str("out");
    fs::create_directories(out);
    std::ofstream os(out / "resolved_config.txt", std::ios::binary);
    os << kv.resolved_text();
    return out;
}

std::uint64_t master_seed(const KvConfig& kv) {
    return static_cast<std::uint64_t>(kv.get_int("seed"));
}

struct SplitSets {
    Dataset train, test;
};

SplitSets split_from(const KvConfig& kv, const Dataset& ds) {
    auto [train, test] = split(ds, kv.get_double("split.fraction"), master_seed(kv));
    return SplitSets{std::move(train), std::move(test)};
}

std::vector<double> targets_of(const Dataset& ds) {
    std::vector<double> y;
    y.reserve(ds.records.size());
    for (const DeliveryRecord& r : ds.records) y.push_back(r.duration_h());
    return y;
}

MetricsReport full_report(std::span<const double> y, std::span<const double> f, double p) {
    MetricsReport r = compute_metrics(y, f);
    r.ew_p = p;
    r.ew = error_window(y, f, p);
    return r;
}

void write_report(const MetricsReport& r, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    os << report_to_text(r);
    std::cout << report_to_text(r);
}

int cmd_gen_data(const CommonArgs& args) {
    const KvConfig kv = resolve(args);
    const fs::path out = prepare_out(kv);
    const Dataset ds = generate_synthetic(synthetic_config_from(kv));
    save_csv(ds, (out / "dataset.csv").string());
    std::cout << "wrote " << (out / "dataset.csv").string() << " (" << ds.size() << " records)\n";
    return 0;
}

int cmd_train(const CommonArgs& args, const std::string& data_path) {
    const KvConfig kv = resolve(args);
    const fs::path out = prepare_out(kv);
    const Dataset ds = load_csv(data_path);
    const SplitSets sets = split_from(kv, ds);
    const FeatureConfig fcfg = feature_config_from(kv);
    const EncodedSet train_set = encode_dataset(sets.train, fcfg);
    const EncodedSet val_set = encode_dataset(sets.test, fcfg);

    Model model(model_spec_from(kv), derive_seed(master_seed(kv), "init"));
    const TrainHistory hist = train(model, train_set, val_set, train_config_from(kv));

    save_checkpoint(model, (out / "checkpoint.bin").string(), kFeatureOrder);
    write_history_csv(hist, (out / "history.csv").string());
    std::cout << "best epoch " << hist.best_epoch << " val_mse " << fmt_double(hist.best_val_mse)
              << " (" << hist.epochs.size() << " epochs, " << model.count_params()
              << " parameters)\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& pred_path) {
    const KvConfig kv = resolve(args);
    const fs::path out = prepare_out(kv);
    const PredictionsFile pf = load_predictions_csv(pred_path);
    write_report(full_report(pf.targets, pf.predictions, kv.get_double("eval.p")),
                 out / "metrics.txt");
    return 0;
}

int cmd_predict(const CommonArgs& args, const std::string& data_path,
                const std::string& model_path, const std::string& subset) {
    const KvConfig kv = resolve(args);
    const fs::path out = prepare_out(kv);
    Dataset ds = load_csv(data_path);
    if (subset == "train")
        ds = split_from(kv, ds).train;
    else if (subset == "test")
        ds = split_from(kv, ds).test;
    else if (subset != "all")
        throw ConfigError("--split must be all|train|test");

    std::string feature_order;
    const Model model = load_checkpoint(model_path, 0, &feature_order);
    if (!feature_order.empty() && feature_order != kFeatureOrder)
        throw ConfigError("checkpoint feature order '" + feature_order +
                          "' does not match this build's '" + kFeatureOrder + "'");

    const FeatureConfig fcfg = feature_config_from(kv);
    const EncodedSet set = encode_dataset(ds, fcfg);
    const std::vector<double> preds = model.predict(set.x, static_cast<int>(set.n));

    if (subset != "all") save_csv(ds, (out / "eval_records.csv").string());
    write_predictions_csv((out / "predictions.csv").string(), set.y, preds);
    std::cout << "wrote " << (out / "predictions.csv").string() << " (" << set.n << " rows)\n";
    return 0;
}

int cmd_baseline(const CommonArgs& args, const std::string& data_path, const std::string& method) {
    const KvConfig kv = resolve(args);
    const fs::path out = prepare_out(kv);
    const Dataset ds = load_csv(data_path);
    const SplitSets sets = split_from(kv, ds);
    const std::vector<double> y = targets_of(sets.test);

    std::vector<double> preds;
    if (method == "sbtte") {
        const NeighborIndex index(sets.train, kv.get_double("sbtte.cell"));
        preds = sbtte_predict_all(index, sets.test, sbtte_params_from(kv), env_thread_cap());
    } else if (method == "mlp1" || method == "mlp2") {
        const FeatureConfig fcfg = feature_config_from(kv);
        const EncodedSet train_set = encode_dataset(sets.train, fcfg);
        const EncodedSet val_set = encode_dataset(sets.test, fcfg);
        Model model(method == "mlp1" ? mlp1_spec() : mlp2_spec(),
                    derive_seed(master_seed(kv), "init"));
        train(model, train_set, val_set, train_config_from(kv));
        preds = model.predict(val_set.x, static_cast<int>(val_set.n));
    } else {
        throw ConfigError("unknown baseline '" + method + "' (expected sbtte|mlp1|mlp2)");
    }

    save_csv(sets.test, (out / "eval_records.csv").string());
    const std::string pred_path = (out / ("predictions_" + method + ".csv")).string();
    write_predictions_csv(pred_path, y, preds);
    write_report(full_report(y, preds, kv.get_double("eval.p")),
                 out / ("metrics_" + method + ".txt"));
    return 0;
}

int cmd_analyze(const CommonArgs& args, const std::string& data_path,
                const std::string& pred_path, std::string dimension) {
    const KvConfig kv = resolve(args);
    const fs::path out = prepare_out(kv);
    const Dataset ds = load_csv(data_path);
    const PredictionsFile pf = load_predictions_csv(pred_path);
    if (pf.targets.size() != ds.records.size())
        throw ContractError("analyze: predictions file has " + std::to_string(pf.targets.size()) +
                            " rows but dataset has " + std::to_string(ds.records.size()));
    const FeatureConfig fcfg = feature_config_from(kv);

    std::vector<std::string> dims;
    if (dimension == "all")
        dims = {"depot", "od_distance_km", "hour", "week", "dow", "target_hour"};
    else
        dims = {dimension};

    for (const std::string& d : dims) {
        const BreakdownTable table =
            error_breakdown(ds, pf.targets, pf.predictions, parse_dimension(d), fcfg);
        write_breakdown_csv(table, (out / ("breakdown_" + d + ".csv")).string());
        if (table.dimension == BreakdownDim::Depot)
            write_depot_map_csv(table, (out / "depot_map.csv").string());
    }
    std::cout << "wrote " << dims.size() << " breakdown table(s) to " << out.string() << "\n";
    return 0;
}

int cmd_project(const CommonArgs& args, const std::string& data_path,
                const std::string& model_path) {
    const KvConfig kv = resolve(args);
    const fs::path out = prepare_out(kv);
    const Dataset ds = load_csv(data_path);
    const Model model = load_checkpoint(model_path);
    const Projection2D proj =
        project_2d(model, ds, feature_config_from(kv), ae_config_from(kv));

    write_projection_csv(proj, (out / "projection.csv").string());
    write_centroid_csv(proj.hour_centroids, "hour", (out / "centroids_hour.csv").string());
    write_centroid_csv(proj.dow_centroids, "dow", (out / "centroids_dow.csv").string());
    std::ofstream os(out / "projection_report.txt", std::ios::binary);
    os << "reconstruction_mse=" << fmt_double(proj.reconstruction_mse) << "\n";
    std::cout << "reconstruction_mse=" << fmt_double(proj.reconstruction_mse) << "\n";
    return 0;
}

int cmd_depth_sweep(const CommonArgs& args, const std::string& data_path,
                    const std::string& family_str) {
    const KvConfig kv = resolve(args);
    const fs::path out = prepare_out(kv);
    const Family family = parse_family(family_str);
    if (family == Family::MLP)
        throw ConfigError("depth-sweep expects a conv family (vgg|resnet)");

    const Dataset ds = load_csv(data_path);
    const SplitSets sets = split_from(kv, ds);
    const FeatureConfig fcfg = feature_config_from(kv);
    const EncodedSet train_set = encode_dataset(sets.train, fcfg);
    const EncodedSet val_set = encode_dataset(sets.test, fcfg);
    const std::vector<double> y(val_set.y);

    const std::string sweep_path = (out / ("depth_sweep_" + family_str + ".csv")).string();
    std::ofstream os(sweep_path, std::ios::binary);
    os << "depth,params,pools,mse,rmse,mae,mape_pct,mare_pct,ew90_h\n";
    for (int depth = 3; depth <= 10; ++depth) {
        Model model(ModelSpec::conv(family, depth, kv.get_bool("model.se"),
                                    static_cast<int>(kv.get_int("model.se_ratio"))),
                    derive_seed(derive_seed(master_seed(kv), "init"), std::to_string(depth)));
        train(model, train_set, val_set, train_config_from(kv));
        const std::vector<double> preds = model.predict(val_set.x, static_cast<int>(val_set.n));
        const MetricsReport r = full_report(y, preds, kv.get_double("eval.p"));
        os << depth << ',' << model.count_params() << ',' << model.pool_count() << ','
           << fmt_double(r.mse) << ',' << fmt_double(r.rmse) << ',' << fmt_double(r.mae) << ','
           << fmt_double(r.mape * 100.0) << ',' << fmt_double(r.mare * 100.0) << ','
           << fmt_double(r.ew) << "\n";
        os.flush();
        std::cout << family_str << "-" << depth << ": mse=" << fmt_double(r.mse)
                  << " params=" << model.count_params() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"origin-destination travel time estimation lab"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string data_path, model_path, pred_path;
    std::string method = "sbtte", dimension = "all", family = "vgg", subset = "all";
    std::int64_t n_override = -1;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
    add_common(gen, common);
    gen->add_option("--n", n_override, "number of records");

    CLI::App* tr = app.add_subcommand("train", "train a model; writes checkpoint + history");
    add_common(tr, common);
    tr->add_option("--data", data_path, "dataset CSV")->required();
    tr->add_option("--family", family, "vgg|resnet|mlp")->capture_default_str();
    std::int64_t depth = -1;
    tr->add_option("--depth", depth, "block count (3-10), or 2|5 for mlp");
    bool se_flag = false;
    tr->add_flag("--se", se_flag, "enable squeeze-and-excitation blocks");

    CLI::App* ev = app.add_subcommand("evaluate", "metrics report from a predictions CSV");
    add_common(ev, common);
    ev->add_option("--predictions", pred_path, "predictions CSV")->required();

    CLI::App* pr = app.add_subcommand("predict", "per-sample predictions from a checkpoint");
    add_common(pr, common);
    pr->add_option("--data", data_path, "dataset CSV")->required();
    pr->add_option("--model", model_path, "checkpoint file")->required();
    pr->add_option("--split", subset, "all|train|test")->capture_default_str();

    CLI::App* bl = app.add_subcommand("baseline", "run a benchmark (sbtte|mlp1|mlp2)");
    add_common(bl, common);
    bl->add_option("--data", data_path, "dataset CSV")->required();
    bl->add_option("--method", method, "sbtte|mlp1|mlp2")->capture_default_str();

    CLI::App* an = app.add_subcommand("analyze", "error breakdown CSVs across data dimensions");
    add_common(an, common);
    an->add_option("--data", data_path, "dataset CSV aligned with the predictions")->required();
    an->add_option("--predictions", pred_path, "predictions CSV")->required();
    an->add_option("--dimension", dimension, "one dimension, or 'all'")->capture_default_str();

    CLI::App* pj = app.add_subcommand("project", "2D projection of the frozen trunk features");
    add_common(pj, common);
    pj->add_option("--data", data_path, "dataset CSV")->required();
    pj->add_option("--model", model_path, "checkpoint file")->required();

    CLI::App* sw = app.add_subcommand("depth-sweep", "train depths 3-10 of one family");
    add_common(sw, common);
    sw->add_option("--data", data_path, "dataset CSV")->required();
    sw->add_option("--family", family, "vgg|resnet")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            if (n_override >= 0) common.sets.push_back("data.n=" + std::to_string(n_override));
            return cmd_gen_data(common);
        }
        if (tr->parsed()) {
            common.sets.push_back("model.family=" + family);
            if (depth >= 0) common.sets.push_back("model.depth=" + std::to_string(depth));
            if (se_flag) common.sets.push_back("model.se=1");
            return cmd_train(common, data_path);
        }
        if (ev->parsed()) return cmd_evaluate(common, pred_path);
        if (pr->parsed()) return cmd_predict(common, data_path, model_path, subset);
        if (bl->parsed()) return cmd_baseline(common, data_path, method);
        if (an->parsed()) return cmd_analyze(common, data_path, pred_path, dimension);
        if (pj->parsed()) return cmd_project(common, data_path, model_path);
        if (sw->parsed()) return cmd_depth_sweep(common, data_path, family);
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "odtte-error code=2 kind=data msg=" << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "odtte-error code=3 kind=numeric msg=" << e.what() << "\n";
        return 3;
    } catch (const ContractError& e) {
        std::cerr << "odtte-error code=1 kind=usage msg=" << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "odtte-error code=1 kind=usage msg=" << e.what() << "\n";
        return 1;
    }
}
