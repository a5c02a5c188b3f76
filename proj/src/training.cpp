#include "odtte/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

#include "odtte/util.hpp"

namespace odtte {

void TrainConfig::validate() const {
    if (initial_lr <= 0 || lr_halving_period <= 0 || batch_size <= 0 || patience < 1 ||
        max_epochs < 1 || beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1 || eps <= 0)
        throw ConfigError("invalid training config");
}

AdamState AdamState::for_params(const std::vector<Tensor*>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor* p : params) {
        s.m.emplace_back(static_cast<size_t>(p->size()), 0.0);
        s.v.emplace_back(static_cast<size_t>(p->size()), 0.0);
    }
    return s;
}

void adam_step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, double lr, const TrainConfig& cfg,
               const std::vector<std::string>& names) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ContractError("adam_step: params/grads/state are misaligned");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (p.size() != g.size())
            throw ContractError("adam_step: gradient size mismatch for " +
                                (i < names.size() ? names[i] : std::to_string(i)));
        double* pv = p.raw();
        const double* gv = g.raw();
        double* m = state.m[i].data();
        double* v = state.v[i].data();
        for (std::int64_t j = 0; j < p.size(); ++j) {
            const double gj = gv[j];
            if (!std::isfinite(gj))
                throw NumericError("non-finite gradient in parameter '" +
                                   (i < names.size() ? names[i] : std::to_string(i)) +
                                   "' at step " + std::to_string(state.step));
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
            pv[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg.eps);
        }
    }
}

double lr_at(int epoch, const TrainConfig& cfg) {
    if (epoch < 0)
        throw ContractError("lr_at: epoch must be >= 0");
    return cfg.initial_lr * std::pow(0.5, epoch / cfg.lr_halving_period);
}

bool early_stop(const std::vector<double>& val_losses, int patience) {
    if (val_losses.empty())
        throw ContractError("early_stop: empty history");
    const int n = static_cast<int>(val_losses.size());
    if (n <= patience) return false;
    double best_before = val_losses[0];
    for (int i = 1; i < n - patience; ++i) best_before = std::min(best_before, val_losses[i]);
    for (int i = n - patience; i < n; ++i)
        if (val_losses[i] < best_before) return false;
    return true;
}

EncodedSet encode_dataset(const Dataset& ds, const FeatureConfig& cfg) {
    cfg.validate();
    EncodedSet set;
    set.n = static_cast<std::int64_t>(ds.records.size());
    set.x.reserve(static_cast<size_t>(set.n) * kFeatureDim);
    set.y.reserve(static_cast<size_t>(set.n));
    for (const DeliveryRecord& r : ds.records) {
        const FeatureVector f = encode_record(r, cfg);
        set.x.insert(set.x.end(), f.begin(), f.end());
        set.y.push_back(r.duration_h());
    }
    return set;
}

static Tensor gather_inputs(const EncodedSet& set, std::span<const size_t> idx, int input_length,
                            int input_channels) {
    const int d = input_length * input_channels;
    Tensor x(Shape{static_cast<int>(idx.size()), input_length, input_channels});
    for (size_t i = 0; i < idx.size(); ++i)
        std::copy_n(set.x.begin() + static_cast<std::int64_t>(idx[i]) * d, d,
                    x.data().begin() + static_cast<std::int64_t>(i) * d);
    return x;
}

double evaluate_mse(const Model& model, const EncodedSet& set, int batch) {
    if (set.n == 0)
        throw ContractError("evaluate_mse: empty set");
    const int L = model.spec().input_length, C = model.spec().input_channels;
    double acc = 0;
    for (std::int64_t start = 0; start < set.n; start += batch) {
        const int b = static_cast<int>(std::min<std::int64_t>(batch, set.n - start));
        std::vector<size_t> idx(static_cast<size_t>(b));
        for (int i = 0; i < b; ++i) idx[i] = static_cast<size_t>(start + i);
        Tensor x = gather_inputs(set, idx, L, C);
        Tensor y(Shape{b, 1, 1},
                 std::vector<double>(set.y.begin() + start, set.y.begin() + start + b));
        Tape tape;
        Model::Staged staged = model.stage(tape);
        NodeId loss = mse_loss(tape, model.forward(tape, staged, tape.leaf(std::move(x))),
                               tape.leaf(std::move(y)));
        acc += tape.value(loss).item() * b;
    }
    return acc / static_cast<double>(set.n);
}

TrainHistory train(Model& model, const EncodedSet& train_set, const EncodedSet& val_set,
                   const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.n == 0)
        throw ContractError("train: empty training set");
    if (val_set.n == 0)
        throw ContractError("train: empty validation set");

    const int L = model.spec().input_length, C = model.spec().input_channels;
    std::vector<Tensor*> params = model.params();
    const std::vector<std::string> names = model.param_names();
    AdamState state = AdamState::for_params(params);
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "shuffle"));

    TrainHistory hist;
    hist.best_val_mse = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_params;
    std::vector<double> val_losses;

    auto snapshot = [&]() {
        best_params.clear();
        for (const Tensor* p : params)
            best_params.emplace_back(p->data().begin(), p->data().end());
    };
    auto restore = [&]() {
        for (size_t i = 0; i < params.size(); ++i)
            std::copy(best_params[i].begin(), best_params[i].end(), params[i]->data().begin());
    };

    std::vector<size_t> perm(static_cast<size_t>(train_set.n));
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = lr_at(epoch - 1, cfg);

        // seeded Fisher-Yates: every sample visited exactly once per epoch
        for (size_t i = perm.size() - 1; i > 0; --i) {
            const std::uint64_t lim = UINT64_MAX - UINT64_MAX % (i + 1);
            std::uint64_t r;
            do {
                r = shuffle_rng();
            } while (r >= lim);
            std::swap(perm[i], perm[r % (i + 1)]);
        }

        double loss_sum = 0;
        for (size_t start = 0; start < perm.size(); start += cfg.batch_size) {
            const size_t b = std::min<size_t>(cfg.batch_size, perm.size() - start);
            std::span<const size_t> idx(perm.data() + start, b);
            Tensor x = gather_inputs(train_set, idx, L, C);
            Tensor y(Shape{static_cast<int>(b), 1, 1});
            for (size_t i = 0; i < b; ++i) y.data()[i] = train_set.y[idx[i]];

            Tape tape;
            Model::Staged staged = model.stage(tape);
            NodeId loss = mse_loss(tape, model.forward(tape, staged, tape.leaf(std::move(x))),
                                   tape.leaf(std::move(y)));
            const double batch_mse = tape.value(loss).item();
            if (!std::isfinite(batch_mse)) {
                if (hist.best_epoch > 0) restore();
                throw NumericError("training diverged (non-finite loss) at epoch " +
                                   std::to_string(epoch));
            }
            loss_sum += batch_mse * static_cast<double>(b);
            tape.backward(loss);

            std::vector<const Tensor*> grads;
            grads.reserve(staged.ids.size());
            for (NodeId id : staged.ids) grads.push_back(&tape.grad(id));
            adam_step(params, grads, state, lr, cfg, names);
        }

        const double train_mse = loss_sum / static_cast<double>(train_set.n);
        const double val_mse = evaluate_mse(model, val_set);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        hist.epochs.push_back(EpochStats{train_mse, val_mse, lr, seconds});
        val_losses.push_back(val_mse);

        if (val_mse < hist.best_val_mse) {
            hist.best_val_mse = val_mse;
            hist.best_epoch = epoch;
            snapshot();
        }
        if (cfg.verbose)
            std::cerr << "epoch " << epoch << " lr=" << lr << " train_mse=" << train_mse
                      << " val_mse=" << val_mse << " (" << seconds << " s)\n";

        if (cfg.target_train_mse > 0 && train_mse < cfg.target_train_mse) break;
        if (early_stop(val_losses, cfg.patience)) break;
    }

    if (hist.best_epoch > 0) restore();
    return hist;
}

void write_history_csv(const TrainHistory& h, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ParseError("cannot open for writing: " + path);
    os << "epoch,train_mse,val_mse,lr,seconds\n";
    for (size_t i = 0; i < h.epochs.size(); ++i) {
        const EpochStats& e = h.epochs[i];
        os << (i + 1) << ',' << fmt_double(e.train_mse) << ',' << fmt_double(e.val_mse) << ','
           << fmt_double(e.lr) << ',' << fmt_double(e.seconds) << "\n";
    }
    if (!os)
        throw ParseError("write failed: " + path);
}

} // namespace odtte
