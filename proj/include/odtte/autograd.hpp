#pragma once

#include <functional>
#include <vector>

#include "odtte/tensor.hpp"

namespace odtte {

using NodeId = std::int32_t;

class Tape;

// Local vector-Jacobian product of one recorded operation: reads grad(self)
// and accumulates into the parents' gradients.
using BackwardFn = std::function<void(Tape&, NodeId)>;

// Dynamic reverse-mode tape, rebuilt per batch. Nodes are appended in
// forward order, so reverse id order is a valid reverse-topological order.
// Single-threaded per training run; values are immutable once recorded.
class Tape {
public:
    NodeId leaf(Tensor value);
    NodeId record(Tensor value, std::vector<NodeId> parents, BackwardFn back);

    const Tensor& value(NodeId id) const { return nodes_[check(id)].value; }

    // Gradient of the loss w.r.t. node id; valid after backward(). Nodes the
    // loss does not depend on hold all zeros.
    const Tensor& grad(NodeId id) const;
    Tensor& grad_mut(NodeId id);

    // Seeds d(loss)/d(loss) = 1 and runs every backward rule in reverse
    // topological order, so each rule fires only after all consumers.
    // Gradients accumulate additively across fan-out. The tape is consumed:
    // no further recording or second backward.
    void backward(NodeId loss);

    std::int32_t size() const { return static_cast<std::int32_t>(nodes_.size()); }
    bool consumed() const { return ran_backward_; }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<NodeId> parents;
        BackwardFn back;
        bool reachable = false;
    };

    NodeId check(NodeId id) const;

    std::vector<Node> nodes_;
    bool ran_backward_ = false;
};

// Central finite differences against the tape's analytic gradient.
// fn builds a scalar loss from the leaf it is handed; returns the max over
// coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
double finite_diff_check(const std::function<NodeId(Tape&, NodeId)>& fn,
                         const Tensor& point, double eps);

} // namespace odtte
