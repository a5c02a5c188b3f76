#include "odtte/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "odtte/training.hpp"
#include "odtte/util.hpp"

namespace odtte {

BreakdownDim parse_dimension(const std::string& s) {
    if (s == "depot") return BreakdownDim::Depot;
    if (s == "od_distance_km") return BreakdownDim::OdDistanceKm;
    if (s == "hour") return BreakdownDim::Hour;
    if (s == "week") return BreakdownDim::Week;
    if (s == "dow") return BreakdownDim::Dow;
    if (s == "target_hour") return BreakdownDim::TargetHour;
    throw ContractError("unknown breakdown dimension '" + s +
                        "' (expected depot|od_distance_km|hour|week|dow|target_hour)");
}

std::string dimension_name(BreakdownDim d) {
    switch (d) {
    case BreakdownDim::Depot: return "depot";
    case BreakdownDim::OdDistanceKm: return "od_distance_km";
    case BreakdownDim::Hour: return "hour";
    case BreakdownDim::Week: return "week";
    case BreakdownDim::Dow: return "dow";
    case BreakdownDim::TargetHour: return "target_hour";
    }
    return "?";
}

BreakdownTable error_breakdown(const Dataset& records, std::span<const double> targets,
                               std::span<const double> predictions, BreakdownDim dim,
                               const FeatureConfig& cfg) {
    if (records.records.size() != targets.size() || targets.size() != predictions.size())
        throw ContractError("error_breakdown: records/targets/predictions are misaligned");
    if (targets.empty())
        throw ContractError("error_breakdown: empty input");

    struct Bin {
        std::string name;
        std::int64_t order;
        std::vector<double> y, f;
        double lat = 0, lon = 0;
    };
    std::map<std::string, Bin> bins;

    for (size_t i = 0; i < records.records.size(); ++i) {
        const DeliveryRecord& r = records.records[i];
        std::string key;
        std::int64_t order = 0;
        switch (dim) {
        case BreakdownDim::Depot:
            key = r.depot_id;
            break;
        case BreakdownDim::OdDistanceKm:
            order = static_cast<std::int64_t>(
                std::floor(haversine_km(r.o_lat, r.o_lon, r.d_lat, r.d_lon)));
            key = std::to_string(order);
            break;
        case BreakdownDim::Hour:
            order = unix_to_civil(r.ofd_time).hour;
            key = std::to_string(order);
            break;
        case BreakdownDim::Week:
            order = (r.ofd_time - cfg.start_time) / (7 * 86400);
            key = std::to_string(order);
            break;
        case BreakdownDim::Dow:
            order = day_of_week(r.ofd_time);
            key = std::to_string(order);
            break;
        case BreakdownDim::TargetHour:
            order = static_cast<std::int64_t>(std::floor(targets[i]));
            key = std::to_string(order);
            break;
        }
        Bin& b = bins[key];
        if (b.y.empty()) {
            b.name = key;
            b.order = order;
            b.lat = r.o_lat;
            b.lon = r.o_lon;
        }
        b.y.push_back(targets[i]);
        b.f.push_back(predictions[i]);
    }

    BreakdownTable table;
    table.dimension = dim;
    table.has_mse = dim == BreakdownDim::TargetHour;
    for (auto& [key, b] : bins) {
        const MetricsReport m = compute_metrics(b.y, b.f);
        BreakdownRow row;
        row.bin = b.name;
        row.order = b.order;
        row.n = m.n;
        row.mape = m.mape;
        row.mare = m.mare;
        row.mse = m.mse;
        row.mae = m.mae;
        row.depot_lat = b.lat;
        row.depot_lon = b.lon;
        table.rows.push_back(std::move(row));
    }
    std::sort(table.rows.begin(), table.rows.end(), [&](const BreakdownRow& a, const BreakdownRow& b) {
        if (dim == BreakdownDim::Depot) return a.bin < b.bin;
        return a.order < b.order;
    });
    return table;
}

void write_breakdown_csv(const BreakdownTable& table, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ParseError("cannot open for writing: " + path);
    os << "bin,n,mape_pct,mare_pct";
    if (table.has_mse) os << ",mse";
    os << "\n";
    for (const BreakdownRow& r : table.rows) {
        os << r.bin << ',' << r.n << ',' << fmt_double(r.mape * 100.0) << ','
           << fmt_double(r.mare * 100.0);
        if (table.has_mse) os << ',' << fmt_double(r.mse);
        os << "\n";
    }
}

void write_depot_map_csv(const BreakdownTable& table, const std::string& path) {
    if (table.dimension != BreakdownDim::Depot)
        throw ContractError("map export requires the depot dimension");
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ParseError("cannot open for writing: " + path);
    os << "depot_id,lat,lon,mape_pct,n\n";
    for (const BreakdownRow& r : table.rows)
        os << r.bin << ',' << fmt_double(r.depot_lat) << ',' << fmt_double(r.depot_lon) << ','
           << fmt_double(r.mape * 100.0) << ',' << r.n << "\n";
}

AeFit fit_linear_autoencoder(const std::vector<std::vector<double>>& rows, const AeConfig& acfg) {
    if (rows.empty())
        throw ContractError("fit_linear_autoencoder: empty input");
    const int n = static_cast<int>(rows.size());
    const int f = static_cast<int>(rows[0].size());

    // mean-center so the bias-free linear autoencoder targets the PCA subspace
    AeFit fit;
    fit.column_mean.assign(static_cast<size_t>(f), 0.0);
    for (const auto& row : rows)
        for (int j = 0; j < f; ++j) fit.column_mean[j] += row[j];
    for (double& v : fit.column_mean) v /= n;

    Tensor centered(Shape{n, 1, f});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j) centered.at(i, 0, j) = rows[i][j] - fit.column_mean[j];

    std::mt19937_64 rng(derive_seed(acfg.seed, "ae"));
    Tensor enc(Shape{f, 1, 2});
    Tensor dec(Shape{2, 1, f});
    glorot_fill(enc, f, 2, rng);
    glorot_fill(dec, 2, f, rng);

    TrainConfig opt;
    std::vector<Tensor*> params = {&enc, &dec};
    AdamState state = AdamState::for_params(params);
    const std::vector<std::string> names = {"encoder.w", "decoder.w"};

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_enc(enc.data().begin(), enc.data().end());
    std::vector<double> best_dec(dec.data().begin(), dec.data().end());
    int since_best = 0;

    for (int epoch = 0; epoch < acfg.max_epochs; ++epoch) {
        Tape tape;
        NodeId x = tape.leaf(centered);
        NodeId we = tape.leaf(enc);
        NodeId wd = tape.leaf(dec);
        NodeId rec = dense_nobias(tape, dense_nobias(tape, x, we), wd);
        NodeId loss = mse_loss(tape, rec, x);
        const double l = tape.value(loss).item();
        if (!std::isfinite(l))
            throw NumericError("autoencoder training diverged at epoch " + std::to_string(epoch));
        if (l < best) {
            best = l;
            best_enc.assign(enc.data().begin(), enc.data().end());
            best_dec.assign(dec.data().begin(), dec.data().end());
            since_best = 0;
        } else if (++since_best >= acfg.patience) {
            break;
        }
        tape.backward(loss);
        std::vector<const Tensor*> grads = {&tape.grad(we), &tape.grad(wd)};
        adam_step(params, grads, state, acfg.lr, opt, names);
    }
    fit.encoder = Tensor(Shape{f, 1, 2}, std::move(best_enc));
    fit.decoder = Tensor(Shape{2, 1, f}, std::move(best_dec));
    fit.reconstruction_mse = best;
    return fit;
}

Projection2D project_2d(const Model& model, const Dataset& data, const FeatureConfig& fcfg,
                        const AeConfig& acfg) {
    if (data.records.empty())
        throw ContractError("project_2d: empty dataset");

    const EncodedSet set = encode_dataset(data, fcfg);
    const std::vector<std::vector<double>> trunk =
        model.trunk_outputs(set.x, static_cast<int>(set.n));
    const int n = static_cast<int>(trunk.size());
    const int f = static_cast<int>(trunk[0].size());

    const AeFit fit = fit_linear_autoencoder(trunk, acfg);

    Projection2D proj;
    proj.reconstruction_mse = fit.reconstruction_mse;
    proj.points.resize(static_cast<size_t>(n));
    proj.hour.resize(static_cast<size_t>(n));
    proj.dow.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double c1 = 0, c2 = 0;
        for (int j = 0; j < f; ++j) {
            const double z = trunk[i][j] - fit.column_mean[j];
            c1 += z * fit.encoder.at(j, 0, 0);
            c2 += z * fit.encoder.at(j, 0, 1);
        }
        proj.points[i] = {c1, c2};
        proj.hour[i] = unix_to_civil(data.records[i].ofd_time).hour;
        proj.dow[i] = day_of_week(data.records[i].ofd_time);

        auto& hc = proj.hour_centroids[proj.hour[i]];
        hc.c1 += c1;
        hc.c2 += c2;
        hc.n += 1;
        auto& dc = proj.dow_centroids[proj.dow[i]];
        dc.c1 += c1;
        dc.c2 += c2;
        dc.n += 1;
    }
    for (auto& [k, c] : proj.hour_centroids) {
        c.c1 /= c.n;
        c.c2 /= c.n;
    }
    for (auto& [k, c] : proj.dow_centroids) {
        c.c1 /= c.n;
        c.c2 /= c.n;
    }
    return proj;
}

void write_projection_csv(const Projection2D& proj, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ParseError("cannot open for writing: " + path);
    os << "sample_id,c1,c2,hour,dow\n";
    for (size_t i = 0; i < proj.points.size(); ++i)
        os << i << ',' << fmt_double(proj.points[i][0]) << ',' << fmt_double(proj.points[i][1])
           << ',' << proj.hour[i] << ',' << proj.dow[i] << "\n";
}

void write_centroid_csv(const std::map<int, Centroid>& centroids, const std::string& label,
                        const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ParseError("cannot open for writing: " + path);
    os << label << ",n,c1,c2\n";
    for (const auto& [k, c] : centroids)
        os << k << ',' << c.n << ',' << fmt_double(c.c1) << ',' << fmt_double(c.c2) << "\n";
}

void write_predictions_csv(const std::string& path, std::span<const double> targets,
                           std::span<const double> predictions) {
    if (targets.size() != predictions.size())
        throw ContractError("write_predictions_csv: length mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ParseError("cannot open for writing: " + path);
    os << "record_id,target_h,prediction_h\n";
    for (size_t i = 0; i < targets.size(); ++i)
        os << i << ',' << fmt_double(targets[i]) << ',' << fmt_double(predictions[i]) << "\n";
}

PredictionsFile load_predictions_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ParseError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line))
        throw ParseError(path + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line) != "record_id,target_h,prediction_h")
        throw ParseError(path + ": unexpected header '" + line + "'");

    PredictionsFile out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 3)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 3 fields");
        try {
            out.ids.push_back(parse_int(f[0]));
            out.targets.push_back(parse_double(f[1]));
            out.predictions.push_back(parse_double(f[2]));
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace odtte
