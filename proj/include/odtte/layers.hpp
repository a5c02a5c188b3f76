#pragma once

#include <random>

#include "odtte/autograd.hpp"

namespace odtte {

// All convolutions are stride-1 cross-correlations with zero same-padding,
// so the spatial length is preserved (12 stays 12 through every conv stack
// and exactly three stride-2 pools reach length 1).
struct Conv1dParams {
    Tensor weight; // (ksize, in_ch, out_ch)
    Tensor bias;   // (1, 1, out_ch)

    int ksize() const { return weight.shape().b; }
    int in_ch() const { return weight.shape().l; }
    int out_ch() const { return weight.shape().c; }

    static Conv1dParams init(int in_ch, int out_ch, int ksize, std::mt19937_64& rng);
};

struct DenseParams {
    Tensor weight; // (n_in, 1, n_out)
    Tensor bias;   // (1, 1, n_out)

    int n_in() const { return weight.shape().b; }
    int n_out() const { return weight.shape().c; }

    static DenseParams init(int n_in, int n_out, std::mt19937_64& rng);
};

// Tape ops. Parameters enter as leaf nodes so their gradients come out of
// the same backward pass as the input's.
NodeId conv1d(Tape& t, NodeId x, NodeId weight, NodeId bias);
NodeId maxpool1d(Tape& t, NodeId x); // window 2, stride 2, trailing element dropped
NodeId dense(Tape& t, NodeId x, NodeId weight, NodeId bias);
NodeId dense_nobias(Tape& t, NodeId x, NodeId weight);
NodeId relu(Tape& t, NodeId x);
NodeId sigmoid(Tape& t, NodeId x);
NodeId global_avg_pool(Tape& t, NodeId x);                // (B,L,C) -> (B,1,C)
NodeId channel_scale(Tape& t, NodeId x, NodeId excite);   // y[b,l,c] = e[b,c] * x[b,l,c]
NodeId flatten(Tape& t, NodeId x);                        // (B,L,C) -> (B,1,L*C)
NodeId add(Tape& t, NodeId a, NodeId b);
NodeId mse_loss(Tape& t, NodeId pred, NodeId target);     // (1/B) * sum |y - f|^2

// Elementwise helpers (losses in tests, excitation algebra).
NodeId mul(Tape& t, NodeId a, NodeId b);
NodeId scale(Tape& t, NodeId a, double k);
NodeId sum(Tape& t, NodeId x); // -> scalar

// Uniform in +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
void glorot_fill(Tensor& w, int fan_in, int fan_out, std::mt19937_64& rng);

} // namespace odtte
