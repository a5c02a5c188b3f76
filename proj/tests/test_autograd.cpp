#include <doctest.h>

#include "helpers.hpp"
#include "odtte/layers.hpp"

using namespace odtte;
using odtte::testing::random_tensor;

TEST_CASE("backward of x^2 at x=3 gives 6") {
    Tape t;
    NodeId x = t.leaf(Tensor::scalar(3.0));
    NodeId loss = mul(t, x, x);
    t.backward(loss);
    CHECK(t.grad(x).item() == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("constant loss leaves every gradient exactly zero") {
    Tape t;
    NodeId x = t.leaf(Tensor({1, 1, 3}, {1.0, -2.0, 0.5}));
    NodeId c = t.leaf(Tensor::scalar(7.0));
    NodeId loss = mul(t, c, c); // no dependence on x
    t.backward(loss);
    for (double g : t.grad(x).data()) CHECK(g == 0.0);
}

TEST_CASE("backward rejects non-scalar losses and consumed tapes") {
    Tape t;
    NodeId x = t.leaf(Tensor({1, 1, 2}, {1.0, 2.0}));
    CHECK_THROWS_AS(t.backward(x), ContractError);

    Tape t2;
    NodeId y = t2.leaf(Tensor::scalar(2.0));
    NodeId loss = mul(t2, y, y);
    t2.backward(loss);
    CHECK_THROWS_AS(t2.backward(loss), ContractError);
    CHECK_THROWS_AS(t2.leaf(Tensor::scalar(1.0)), ContractError);
}

TEST_CASE("fan-out accumulates both path gradients") {
    // f(x) = sum(x*a) + sum(x*a) should give twice the single-path gradient
    std::mt19937_64 rng(5);
    Tensor xv = random_tensor({2, 3, 2}, rng);
    Tensor av = random_tensor({2, 3, 2}, rng);

    Tape t1;
    NodeId x1 = t1.leaf(xv);
    NodeId a1 = t1.leaf(av);
    NodeId p1 = sum(t1, mul(t1, x1, a1));
    t1.backward(p1);

    Tape t2;
    NodeId x2 = t2.leaf(xv);
    NodeId a2 = t2.leaf(av);
    NodeId both = add(t2, mul(t2, x2, a2), mul(t2, x2, a2));
    t2.backward(sum(t2, both));

    for (std::int64_t i = 0; i < xv.size(); ++i)
        CHECK(t2.grad(x2).data()[i] == doctest::Approx(2.0 * t1.grad(x1).data()[i]).epsilon(1e-14));
}

TEST_CASE("gradient is linear in the loss combination") {
    std::mt19937_64 rng(9);
    Tensor xv = random_tensor({1, 4, 2}, rng);
    const double a = 1.7, b = -0.4;

    auto grad_of = [&](auto&& lossfn) {
        Tape t;
        NodeId x = t.leaf(xv);
        t.backward(lossfn(t, x));
        Tensor g = t.grad(x);
        return g;
    };

    auto f = [](Tape& t, NodeId x) { return sum(t, mul(t, x, x)); };
    auto g = [](Tape& t, NodeId x) { return sum(t, sigmoid(t, x)); };
    Tensor gf = grad_of(f);
    Tensor gg = grad_of(g);
    Tensor gab = grad_of([&](Tape& t, NodeId x) {
        return add(t, scale(t, f(t, x), a), scale(t, g(t, x), b));
    });

    for (std::int64_t i = 0; i < xv.size(); ++i)
        CHECK(gab.data()[i] ==
              doctest::Approx(a * gf.data()[i] + b * gg.data()[i]).epsilon(1e-12));
}

TEST_CASE("identical tapes give bitwise identical gradients") {
    std::mt19937_64 rng(13);
    Tensor xv = random_tensor({2, 6, 3}, rng);
    auto run = [&]() {
        Tape t;
        NodeId x = t.leaf(xv);
        NodeId loss = sum(t, sigmoid(t, mul(t, x, x)));
        t.backward(loss);
        Tensor g = t.grad(x);
        return g;
    };
    Tensor g1 = run(), g2 = run();
    for (std::int64_t i = 0; i < g1.size(); ++i) CHECK(g1.data()[i] == g2.data()[i]);
}

TEST_CASE("finite_diff_check: identity-sum gradient is exact") {
    std::mt19937_64 rng(21);
    const double err = finite_diff_check([](Tape& t, NodeId x) { return sum(t, x); },
                                         random_tensor({2, 3, 2}, rng), 1e-5);
    CHECK(err < 1e-10);
}

TEST_CASE("finite_diff_check: sigmoid-sum at zero has slope 1/4 per coordinate") {
    Tensor zeros({1, 2, 2});
    Tape t;
    NodeId x = t.leaf(zeros);
    NodeId loss = sum(t, sigmoid(t, x));
    t.backward(loss);
    for (double g : t.grad(x).data()) CHECK(g == doctest::Approx(0.25).epsilon(1e-14));

    const double err = finite_diff_check(
        [](Tape& tp, NodeId xx) { return sum(tp, sigmoid(tp, xx)); }, zeros, 1e-5);
    CHECK(err < 1e-9);
}

TEST_CASE("finite_diff_check: conv1d -> ReLU -> dense MSE pipeline") {
    std::mt19937_64 rng(33);
    Conv1dParams conv = Conv1dParams::init(2, 3, 3, rng);
    DenseParams head = DenseParams::init(6 * 3, 1, rng);
    Tensor target = random_tensor({2, 1, 1}, rng, 0.5, 2.0);

    auto pipeline = [&](Tape& t, NodeId x) {
        NodeId h = relu(t, conv1d(t, x, t.leaf(conv.weight), t.leaf(conv.bias)));
        NodeId y = dense(t, flatten(t, h), t.leaf(head.weight), t.leaf(head.bias));
        return mse_loss(t, y, t.leaf(target));
    };

    const Tensor point = odtte::testing::random_tensor_nonzero({2, 6, 2}, rng);
    CHECK(finite_diff_check(pipeline, point, 1e-5) < 1e-6);
}

TEST_CASE("finite_diff_check rejects bad inputs") {
    std::mt19937_64 rng(3);
    CHECK_THROWS_AS(finite_diff_check([](Tape& t, NodeId x) { return sum(t, x); },
                                      random_tensor({1, 1, 2}, rng), 0.0),
                    ContractError);
}
