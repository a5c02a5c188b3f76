#include "odtte/arch.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "odtte/util.hpp"

namespace odtte {

std::string family_name(Family f) {
    switch (f) {
    case Family::VGG: return "vgg";
    case Family::ResNet: return "resnet";
    case Family::MLP: return "mlp";
    }
    return "?";
}

Family parse_family(const std::string& s) {
    if (s == "vgg") return Family::VGG;
    if (s == "resnet") return Family::ResNet;
    if (s == "mlp") return Family::MLP;
    throw ConfigError("unknown model family '" + s + "' (expected vgg|resnet|mlp)");
}

std::vector<int> table_depth_summary(int depth) {
    switch (depth) {
    case 3: return {64, 128, 256};
    case 4: return {64, 128, 256, 512};
    case 5: return {64, 128, 256, 512, 1024};
    case 6: return {64, 128, 256, 256, 512, 1024};
    case 7: return {64, 128, 256, 256, 512, 512, 1024};
    case 8: return {64, 128, 128, 256, 256, 512, 512, 1024};
    case 9: return {64, 64, 128, 128, 256, 256, 512, 512, 1024};
    case 10: return {64, 64, 128, 128, 256, 256, 512, 512, 1024, 1024};
    default:
        throw ConfigError("depth summary length must be in [3,10], got " + std::to_string(depth));
    }
}

std::vector<int> pool_placement(int num_blocks, int num_pools) {
    if (num_pools < 1 || num_pools > num_blocks)
        throw ContractError("pool_placement requires 1 <= pools <= blocks, got " +
                            std::to_string(num_pools) + "/" + std::to_string(num_blocks));
    auto ceil_div = [](std::int64_t a, std::int64_t b) { return (a + b - 1) / b; };
    std::vector<int> out;
    for (int i = 1; i <= num_blocks; ++i) {
        if (ceil_div(static_cast<std::int64_t>(i) * num_pools, num_blocks) >
            ceil_div(static_cast<std::int64_t>(i - 1) * num_pools, num_blocks))
            out.push_back(i);
    }
    return out;
}

// Number of stride-2 pools that take the input length down to 1.
static int max_pools_for(int input_length) {
    int n = 0;
    for (int l = input_length; l >= 2; l /= 2) ++n;
    return n;
}

ModelSpec ModelSpec::conv(Family family, int depth, bool se_enabled, int se_ratio) {
    if (family == Family::MLP)
        throw ConfigError("ModelSpec::conv expects a conv family");
    ModelSpec spec;
    spec.family = family;
    spec.widths = table_depth_summary(depth);
    spec.se.enabled = se_enabled;
    spec.se.ratio = se_ratio;
    spec.validate();
    return spec;
}

ModelSpec ModelSpec::mlp(int hidden_layers, int units) {
    ModelSpec spec;
    spec.family = Family::MLP;
    spec.widths.assign(static_cast<size_t>(hidden_layers), units);
    spec.validate();
    return spec;
}

void ModelSpec::validate() const {
    if (widths.empty())
        throw ConfigError("model spec invariant violated: widths must be non-empty");
    for (int w : widths)
        if (w < 1)
            throw ConfigError("model spec invariant violated: width " + std::to_string(w) +
                              " must be positive");
    if (input_length < 1 || input_channels < 1)
        throw ConfigError("model spec invariant violated: input shape must be positive");
    if (family != Family::MLP) {
        if (!std::is_sorted(widths.begin(), widths.end()))
            throw ConfigError("model spec invariant violated: conv widths must be non-decreasing");
        if (se.enabled && se.ratio < 1)
            throw ConfigError("model spec invariant violated: se ratio must be >= 1");
        if (family == Family::VGG && max_pools_for(input_length) < 1)
            throw ConfigError("model spec invariant violated: input too short to pool");
    }
    if (head.empty())
        throw ConfigError("model spec invariant violated: head must have at least one layer");
    for (int h : head)
        if (h < 1)
            throw ConfigError("model spec invariant violated: head width must be positive");
}

static std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

static std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    for (const std::string& tok : split_csv_line(s))
        out.push_back(static_cast<int>(parse_int(trim(tok))));
    return out;
}

std::string ModelSpec::to_text() const {
    std::ostringstream os;
    os << "family=" << family_name(family) << "\n";
    os << "widths=" << join_ints(widths) << "\n";
    os << "se=" << (se.enabled ? 1 : 0) << "\n";
    os << "se_ratio=" << se.ratio << "\n";
    os << "input_length=" << input_length << "\n";
    os << "input_channels=" << input_channels << "\n";
    os << "head=" << join_ints(head) << "\n";
    return os.str();
}

ModelSpec ModelSpec::from_text(const std::string& text) {
    ModelSpec spec;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("model spec line missing '=': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "family") spec.family = parse_family(val);
        else if (key == "widths") spec.widths = parse_ints(val);
        else if (key == "se") spec.se.enabled = parse_int(val) != 0;
        else if (key == "se_ratio") spec.se.ratio = static_cast<int>(parse_int(val));
        else if (key == "input_length") spec.input_length = static_cast<int>(parse_int(val));
        else if (key == "input_channels") spec.input_channels = static_cast<int>(parse_int(val));
        else if (key == "head") spec.head = parse_ints(val);
        // unknown keys (e.g. feature_order) are owned by the container
    }
    spec.validate();
    return spec;
}

static SeParams make_se(int channels, int ratio, std::mt19937_64& rng) {
    const int bottleneck = std::max(1, channels / ratio);
    SeParams se;
    se.reduce = DenseParams::init(channels, bottleneck, rng);
    se.expand = DenseParams::init(bottleneck, channels, rng);
    return se;
}

Model::Model(ModelSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
    spec_.validate();
    std::mt19937_64 rng(init_seed);

    if (spec_.family == Family::MLP) {
        int in = spec_.input_length * spec_.input_channels;
        for (int w : spec_.widths) {
            mlp_stack_.push_back(DenseParams::init(in, w, rng));
            in = w;
        }
        head_.push_back(DenseParams::init(in, 1, rng));
        return;
    }

    std::vector<int> pools;
    if (spec_.family == Family::VGG) {
        const int num_pools = std::min(max_pools_for(spec_.input_length),
                                       static_cast<int>(spec_.widths.size()));
        pools = pool_placement(static_cast<int>(spec_.widths.size()), num_pools);
    }

    int in_ch = spec_.input_channels;
    for (size_t i = 0; i < spec_.widths.size(); ++i) {
        const int width = spec_.widths[i];
        ConvBlock block;
        block.conv1 = Conv1dParams::init(in_ch, width, 3, rng);
        block.conv2 = Conv1dParams::init(width, width, 3, rng);
        if (spec_.family == Family::ResNet && in_ch != width)
            block.projection = Conv1dParams::init(in_ch, width, 1, rng);
        if (spec_.se.enabled)
            block.se = make_se(width, spec_.se.ratio, rng);
        if (spec_.family == Family::VGG)
            block.pool = std::find(pools.begin(), pools.end(), static_cast<int>(i) + 1) != pools.end();
        blocks_.push_back(std::move(block));
        in_ch = width;
    }

    int flat = trunk_width();
    for (int h : spec_.head) {
        head_.push_back(DenseParams::init(flat, h, rng));
        flat = h;
    }
    head_.push_back(DenseParams::init(flat, 1, rng));
}

int Model::pool_count() const {
    int n = 0;
    for (const ConvBlock& b : blocks_)
        if (b.pool) ++n;
    return n;
}

int Model::trunk_width() const {
    if (spec_.family == Family::MLP)
        return spec_.input_length * spec_.input_channels;
    int len = spec_.input_length;
    for (const ConvBlock& b : blocks_)
        if (b.pool) len /= 2;
    return len * spec_.widths.back();
}

template <class Fn> void Model::visit_params(Fn&& fn) const {
    auto dense_params = [&](const DenseParams& d, const std::string& name) {
        fn(d.weight, name + ".w");
        fn(d.bias, name + ".b");
    };
    auto conv_params = [&](const Conv1dParams& c, const std::string& name) {
        fn(c.weight, name + ".w");
        fn(c.bias, name + ".b");
    };
    for (size_t i = 0; i < blocks_.size(); ++i) {
        const ConvBlock& b = blocks_[i];
        const std::string base = "block" + std::to_string(i + 1);
        conv_params(b.conv1, base + ".conv1");
        conv_params(b.conv2, base + ".conv2");
        if (b.projection) conv_params(*b.projection, base + ".proj");
        if (b.se) {
            dense_params(b.se->reduce, base + ".se.reduce");
            dense_params(b.se->expand, base + ".se.expand");
        }
    }
    for (size_t i = 0; i < mlp_stack_.size(); ++i)
        dense_params(mlp_stack_[i], "hidden" + std::to_string(i + 1));
    for (size_t i = 0; i < head_.size(); ++i) {
        const bool out = i + 1 == head_.size();
        dense_params(head_[i], out ? std::string("output") : "head" + std::to_string(i + 1));
    }
}

std::vector<Tensor*> Model::params() {
    std::vector<Tensor*> out;
    visit_params([&](const Tensor& t, const std::string&) {
        out.push_back(const_cast<Tensor*>(&t));
    });
    return out;
}

std::vector<const Tensor*> Model::params() const {
    std::vector<const Tensor*> out;
    visit_params([&](const Tensor& t, const std::string&) { out.push_back(&t); });
    return out;
}

std::vector<std::string> Model::param_names() const {
    std::vector<std::string> out;
    visit_params([&](const Tensor&, const std::string& n) { out.push_back(n); });
    return out;
}

std::int64_t Model::count_params() const {
    std::int64_t n = 0;
    visit_params([&](const Tensor& t, const std::string&) { n += t.size(); });
    return n;
}

Model::Staged Model::stage(Tape& t) const {
    Staged s;
    visit_params([&](const Tensor& p, const std::string&) { s.ids.push_back(t.leaf(p)); });
    return s;
}

NodeId se_unit_forward(Tape& t, NodeId h, NodeId reduce_w, NodeId reduce_b, NodeId expand_w,
                       NodeId expand_b) {
    NodeId squeezed = global_avg_pool(t, h);
    NodeId excite =
        sigmoid(t, dense(t, relu(t, dense(t, squeezed, reduce_w, reduce_b)), expand_w, expand_b));
    return channel_scale(t, h, excite);
}

StagedBlock stage_block(Tape& t, const ConvBlock& b) {
    StagedBlock s;
    s.conv1_w = t.leaf(b.conv1.weight);
    s.conv1_b = t.leaf(b.conv1.bias);
    s.conv2_w = t.leaf(b.conv2.weight);
    s.conv2_b = t.leaf(b.conv2.bias);
    if (b.projection) {
        s.proj_w = t.leaf(b.projection->weight);
        s.proj_b = t.leaf(b.projection->bias);
    }
    if (b.se) {
        s.se_reduce_w = t.leaf(b.se->reduce.weight);
        s.se_reduce_b = t.leaf(b.se->reduce.bias);
        s.se_expand_w = t.leaf(b.se->expand.weight);
        s.se_expand_b = t.leaf(b.se->expand.bias);
    }
    return s;
}

NodeId block_forward(Tape& t, Family family, const ConvBlock& b, const StagedBlock& s, NodeId x) {
    if (family == Family::VGG) {
        NodeId y = relu(t, conv1d(t, x, s.conv1_w, s.conv1_b));
        y = relu(t, conv1d(t, y, s.conv2_w, s.conv2_b));
        if (b.se) // before pooling
            y = se_unit_forward(t, y, s.se_reduce_w, s.se_reduce_b, s.se_expand_w, s.se_expand_b);
        if (b.pool) y = maxpool1d(t, y);
        return y;
    }
    if (family != Family::ResNet)
        throw ContractError("block_forward expects a conv family");
    NodeId y = relu(t, conv1d(t, x, s.conv1_w, s.conv1_b));
    y = conv1d(t, y, s.conv2_w, s.conv2_b);
    NodeId skip = x;
    if (b.projection) skip = conv1d(t, x, s.proj_w, s.proj_b);
    if (b.se) // before aggregating the skip connection
        y = se_unit_forward(t, y, s.se_reduce_w, s.se_reduce_b, s.se_expand_w, s.se_expand_b);
    return relu(t, add(t, y, skip));
}

namespace {

struct ParamCursor {
    const Model::Staged& staged;
    size_t next = 0;
    NodeId take() { return staged.ids.at(next++); }
};

StagedBlock staged_from_cursor(ParamCursor& cur, const ConvBlock& b) {
    StagedBlock s;
    s.conv1_w = cur.take();
    s.conv1_b = cur.take();
    s.conv2_w = cur.take();
    s.conv2_b = cur.take();
    if (b.projection) {
        s.proj_w = cur.take();
        s.proj_b = cur.take();
    }
    if (b.se) {
        s.se_reduce_w = cur.take();
        s.se_reduce_b = cur.take();
        s.se_expand_w = cur.take();
        s.se_expand_b = cur.take();
    }
    return s;
}

} // namespace

NodeId Model::trunk(Tape& t, const Staged& s, NodeId x) const {
    ParamCursor cur{s};
    if (spec_.family == Family::MLP)
        return flatten(t, x);

    NodeId h = x;
    for (const ConvBlock& b : blocks_) {
        const StagedBlock staged = staged_from_cursor(cur, b);
        h = block_forward(t, spec_.family, b, staged, h);
    }
    return flatten(t, h);
}

NodeId Model::forward(Tape& t, const Staged& s, NodeId x) const {
    NodeId h = trunk(t, s, x);

    // trunk() consumed the block parameters; skip to the dense stack
    size_t consumed = 0;
    for (const ConvBlock& b : blocks_) {
        consumed += 4;
        if (b.projection) consumed += 2;
        if (b.se) consumed += 4;
    }
    ParamCursor cur{s, consumed};

    for (size_t i = 0; i < mlp_stack_.size(); ++i)
        h = relu(t, dense(t, h, cur.take(), cur.take()));
    for (size_t i = 0; i + 1 < head_.size(); ++i)
        h = relu(t, dense(t, h, cur.take(), cur.take()));
    return dense(t, h, cur.take(), cur.take()); // linear output
}

std::vector<double> Model::predict(std::span<const double> rows, int n, int batch) const {
    const int d = spec_.input_length * spec_.input_channels;
    if (static_cast<std::int64_t>(rows.size()) != static_cast<std::int64_t>(n) * d)
        throw ContractError("predict: rows size does not match n x " + std::to_string(d));
    std::vector<double> out(static_cast<size_t>(n));
    for (int start = 0; start < n; start += batch) {
        const int b = std::min(batch, n - start);
        Tensor x(Shape{b, spec_.input_length, spec_.input_channels},
                 std::vector<double>(rows.begin() + static_cast<std::int64_t>(start) * d,
                                     rows.begin() + static_cast<std::int64_t>(start + b) * d));
        Tape tape;
        Staged staged = stage(tape);
        NodeId y = forward(tape, staged, tape.leaf(std::move(x)));
        const Tensor& yv = tape.value(y);
        for (int i = 0; i < b; ++i) out[static_cast<size_t>(start) + i] = yv.at(i, 0, 0);
    }
    return out;
}

std::vector<std::vector<double>> Model::trunk_outputs(std::span<const double> rows, int n,
                                                      int batch) const {
    const int d = spec_.input_length * spec_.input_channels;
    if (static_cast<std::int64_t>(rows.size()) != static_cast<std::int64_t>(n) * d)
        throw ContractError("trunk_outputs: rows size does not match n x " + std::to_string(d));
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<size_t>(n));
    for (int start = 0; start < n; start += batch) {
        const int b = std::min(batch, n - start);
        Tensor x(Shape{b, spec_.input_length, spec_.input_channels},
                 std::vector<double>(rows.begin() + static_cast<std::int64_t>(start) * d,
                                     rows.begin() + static_cast<std::int64_t>(start + b) * d));
        Tape tape;
        Staged staged = stage(tape);
        NodeId z = trunk(tape, staged, tape.leaf(std::move(x)));
        const Tensor& zv = tape.value(z);
        const int f = zv.shape().c;
        for (int i = 0; i < b; ++i) {
            const double* row = zv.raw() + static_cast<size_t>(i) * f;
            out.emplace_back(row, row + f);
        }
    }
    return out;
}

// ---- checkpoint io ----

static constexpr char kMagic[] = "ODTTE-CKPT";
static constexpr std::uint32_t kVersion = 1;

static void put_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

static void put_u64le(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

static void put_f64le(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64le(os, v);
}

static std::uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

static std::uint64_t get_u64le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

static double get_f64le(std::istream& is) {
    const std::uint64_t v = get_u64le(is);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

void save_checkpoint(const Model& model, const std::string& path,
                     const std::string& feature_order) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ParseError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic) - 1);
    put_u32le(os, kVersion);

    std::string text = model.spec().to_text();
    text += "feature_order=" + feature_order + "\n";
    put_u64le(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));

    std::uint64_t total = 0;
    for (const Tensor* p : model.params()) total += static_cast<std::uint64_t>(p->size());
    put_u64le(os, total);
    for (const Tensor* p : model.params())
        for (double v : p->data()) put_f64le(os, v);
    if (!os)
        throw ParseError("checkpoint write failed: " + path);
}

Model load_checkpoint(const std::string& path, std::uint64_t init_seed,
                      std::string* feature_order) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ParseError("cannot open checkpoint: " + path);
    char magic[sizeof(kMagic) - 1];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw ParseError("not a checkpoint file (bad magic): " + path);
    const std::uint32_t version = get_u32le(is);
    if (version != kVersion)
        throw ParseError("unsupported checkpoint version " + std::to_string(version));

    const std::uint64_t text_len = get_u64le(is);
    std::string text(text_len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(text_len));
    if (!is)
        throw ParseError("truncated checkpoint header: " + path);

    if (feature_order) {
        feature_order->clear();
        std::istringstream ts(text);
        std::string line;
        while (std::getline(ts, line)) {
            if (line.rfind("feature_order=", 0) == 0)
                *feature_order = line.substr(std::string("feature_order=").size());
        }
    }

    Model model(ModelSpec::from_text(text), init_seed);
    const std::uint64_t total = get_u64le(is);
    std::uint64_t expect = 0;
    for (const Tensor* p : model.params()) expect += static_cast<std::uint64_t>(p->size());
    if (total != expect)
        throw ParseError("checkpoint parameter count " + std::to_string(total) +
                         " does not match spec (" + std::to_string(expect) + ")");
    for (Tensor* p : model.params())
        for (double& v : p->data()) v = get_f64le(is);
    if (!is)
        throw ParseError("truncated checkpoint payload: " + path);
    return model;
}

} // namespace odtte
