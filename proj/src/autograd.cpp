#include "odtte/autograd.hpp"

#include <cmath>

namespace odtte {

NodeId Tape::check(NodeId id) const {
    if (id < 0 || id >= size())
        throw ContractError("tape node id " + std::to_string(id) + " out of range");
    return id;
}

NodeId Tape::leaf(Tensor value) {
    return record(std::move(value), {}, nullptr);
}

NodeId Tape::record(Tensor value, std::vector<NodeId> parents, BackwardFn back) {
    if (ran_backward_)
        throw ContractError("recording on a consumed tape");
    NodeId id = size();
    for (NodeId p : parents)
        if (p < 0 || p >= id)
            throw ContractError("tape parent " + std::to_string(p) + " not older than node " + std::to_string(id));
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(parents), std::move(back), false});
    return id;
}

const Tensor& Tape::grad(NodeId id) const {
    const Node& n = nodes_[check(id)];
    if (!ran_backward_)
        throw ContractError("grad() before backward()");
    return n.grad;
}

Tensor& Tape::grad_mut(NodeId id) {
    return nodes_[check(id)].grad;
}

void Tape::backward(NodeId loss) {
    check(loss);
    if (ran_backward_)
        throw ContractError("backward() on a consumed tape");
    if (nodes_[loss].value.size() != 1)
        throw ContractError("backward() requires a scalar loss, got shape " + nodes_[loss].value.shape().str());

    // Mark the subgraph the loss depends on; unreachable rules are skipped.
    std::vector<NodeId> stack = {loss};
    nodes_[loss].reachable = true;
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        for (NodeId p : nodes_[id].parents) {
            if (!nodes_[p].reachable) {
                nodes_[p].reachable = true;
                stack.push_back(p);
            }
        }
    }
    for (Node& n : nodes_)
        n.grad = Tensor(n.value.shape()); // zero-initialized

    ran_backward_ = true;
    nodes_[loss].grad.fill(1.0);
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.reachable && n.back)
            n.back(*this, id);
    }
}

double finite_diff_check(const std::function<NodeId(Tape&, NodeId)>& fn,
                         const Tensor& point, double eps) {
    if (eps <= 0.0)
        throw ContractError("finite_diff_check requires eps > 0");

    Tape tape;
    NodeId x = tape.leaf(point);
    NodeId loss = fn(tape, x);
    if (!tape.value(loss).all_finite())
        throw NumericError("finite_diff_check: non-finite loss at the base point");
    tape.backward(loss);
    Tensor analytic = tape.grad(x);

    auto eval = [&](const Tensor& p) {
        Tape t;
        NodeId l = fn(t, t.leaf(p));
        double v = t.value(l).item();
        if (!std::isfinite(v))
            throw NumericError("finite_diff_check: non-finite loss during perturbation");
        return v;
    };

    double max_rel = 0.0;
    Tensor probe = point;
    for (std::int64_t i = 0; i < point.size(); ++i) {
        const double orig = probe.data()[i];
        probe.data()[i] = orig + eps;
        double f_plus = eval(probe);
        probe.data()[i] = orig - eps;
        double f_minus = eval(probe);
        probe.data()[i] = orig;

        double numeric = (f_plus - f_minus) / (2.0 * eps);
        double a = analytic.data()[i];
        double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-12});
        max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }
    return max_rel;
}

} // namespace odtte
