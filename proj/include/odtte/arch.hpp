#pragma once

#include <optional>
#include <string>
#include <vector>

#include "odtte/layers.hpp"

namespace odtte {

enum class Family { VGG, ResNet, MLP };

std::string family_name(Family f);
Family parse_family(const std::string& s); // throws ConfigError

// Per-block channel widths for depths 3..10. Depth 3 is [64,128,256]; deeper
// entries first append wider blocks, then replicate interior widths.
std::vector<int> table_depth_summary(int depth);

// 1-indexed block indices followed by a stride-2 max pool: evenly spread,
// earlier blocks first. Pool after block i iff ceil(i*P/B) > ceil((i-1)*P/B).
std::vector<int> pool_placement(int num_blocks, int num_pools);

struct SeSettings {
    bool enabled = false;
    int ratio = 16;
};

struct ModelSpec {
    Family family = Family::ResNet;
    std::vector<int> widths;        // conv block widths, or MLP hidden widths
    SeSettings se;
    int input_length = 12;
    int input_channels = 1;
    std::vector<int> head = {50, 50}; // FC hidden widths; a 1-unit linear output follows

    // Paper-style conv spec at a given depth; MLP benchmarks by hidden count.
    static ModelSpec conv(Family family, int depth, bool se_enabled, int se_ratio = 16);
    static ModelSpec mlp(int hidden_layers, int units = 50);

    void validate() const; // ConfigError naming the violated invariant
    std::string to_text() const;
    static ModelSpec from_text(const std::string& text);
};

struct SeParams {
    DenseParams reduce; // C -> max(1, C/r)
    DenseParams expand; // max(1, C/r) -> C
};

struct ConvBlock {
    Conv1dParams conv1;
    Conv1dParams conv2;
    std::optional<Conv1dParams> projection; // ResNet 1x1 skip when widths change
    std::optional<SeParams> se;
    bool pool = false; // VGG only
};

// squeeze -> two-layer excitation bottleneck -> channel rescale
NodeId se_unit_forward(Tape& t, NodeId h, NodeId reduce_w, NodeId reduce_b, NodeId expand_w,
                       NodeId expand_b);

struct StagedBlock {
    NodeId conv1_w, conv1_b, conv2_w, conv2_b;
    NodeId proj_w = -1, proj_b = -1;
    NodeId se_reduce_w = -1, se_reduce_b = -1, se_expand_w = -1, se_expand_b = -1;
};
StagedBlock stage_block(Tape& t, const ConvBlock& b);

// VGG: conv-ReLU-conv-ReLU [-SE] [-pool]. ResNet: conv-ReLU-conv [-SE],
// skip (projected when widths change) aggregated before the final ReLU.
NodeId block_forward(Tape& t, Family family, const ConvBlock& b, const StagedBlock& s, NodeId x);

class Model {
public:
    Model(ModelSpec spec, std::uint64_t init_seed);

    const ModelSpec& spec() const { return spec_; }

    // Parameter tensors in declaration order (checkpoint / optimizer order).
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
    std::vector<std::string> param_names() const;
    std::int64_t count_params() const;

    struct Staged {
        std::vector<NodeId> ids;
    };
    Staged stage(Tape& t) const;
    NodeId forward(Tape& t, const Staged& s, NodeId x) const; // -> (B,1,1)
    // Conv blocks + flatten, without the FC head (the representation the
    // 2D projection consumes).
    NodeId trunk(Tape& t, const Staged& s, NodeId x) const;   // -> (B,1,F)
    int trunk_width() const;
    int pool_count() const;

    // Inference on encoded rows (n x input_length*input_channels), batched
    // over a fresh tape; deterministic.
    std::vector<double> predict(std::span<const double> rows, int n, int batch = 256) const;
    std::vector<std::vector<double>> trunk_outputs(std::span<const double> rows, int n,
                                                   int batch = 256) const;

private:
    ModelSpec spec_;
    std::vector<ConvBlock> blocks_;
    std::vector<DenseParams> mlp_stack_;
    std::vector<DenseParams> head_;

    template <class Fn> void visit_params(Fn&& fn) const;
};

// Self-describing checkpoint: magic string, version integer, the ModelSpec
// as structured text (plus the feature order string), then every parameter
// flat in declaration order as little-endian 64-bit floats.
void save_checkpoint(const Model& model, const std::string& path,
                     const std::string& feature_order);
Model load_checkpoint(const std::string& path, std::uint64_t init_seed = 0,
                      std::string* feature_order = nullptr);

} // namespace odtte
