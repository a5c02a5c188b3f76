#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "odtte/layers.hpp"

using namespace odtte;
using odtte::testing::random_tensor;
using odtte::testing::random_tensor_nonzero;

namespace {

Tensor row(std::vector<double> v) { // (1, L, 1)
    const int l = static_cast<int>(v.size());
    return Tensor({1, l, 1}, std::move(v));
}

std::vector<double> conv_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tape t;
    NodeId y = conv1d(t, t.leaf(x), t.leaf(w), t.leaf(b));
    auto d = t.value(y).data();
    return {d.begin(), d.end()};
}

} // namespace

TEST_CASE("conv1d identity kernel is the identity map") {
    Tensor w({3, 1, 1}, {0.0, 1.0, 0.0});
    Tensor b({1, 1, 1}, {0.0});
    CHECK(conv_forward(row({1, 2, 3, 4}), w, b) == std::vector<double>{1, 2, 3, 4});

    std::mt19937_64 rng(2);
    Tensor x = random_tensor({3, 7, 1}, rng);
    Tape t;
    NodeId y = conv1d(t, t.leaf(x), t.leaf(w), t.leaf(b));
    for (std::int64_t i = 0; i < x.size(); ++i)
        CHECK(t.value(y).data()[i] == x.data()[i]); // exact
}

TEST_CASE("conv1d difference kernel matches hand summation") {
    Tensor w({3, 1, 1}, {1.0, 0.0, -1.0});
    Tensor b({1, 1, 1}, {0.0});
    CHECK(conv_forward(row({1, 2, 3, 4}), w, b) == std::vector<double>{-2, -2, -2, 3});
}

TEST_CASE("conv1d on zeros yields the bias everywhere") {
    std::mt19937_64 rng(4);
    Tensor w = random_tensor({3, 2, 3}, rng);
    Tensor b({1, 1, 3}, {0.7, -0.3, 1.1});
    Tape t;
    NodeId y = conv1d(t, t.leaf(Tensor({2, 5, 2})), t.leaf(w), t.leaf(b));
    const Tensor& yv = t.value(y);
    for (int bi = 0; bi < 2; ++bi)
        for (int l = 0; l < 5; ++l)
            for (int c = 0; c < 3; ++c) CHECK(yv.at(bi, l, c) == b.at(0, 0, c));
}

TEST_CASE("conv1d rejects channel mismatches") {
    std::mt19937_64 rng(6);
    Tape t;
    NodeId x = t.leaf(random_tensor({1, 4, 2}, rng));
    NodeId w = t.leaf(random_tensor({3, 3, 2}, rng)); // expects 3 input channels
    NodeId b = t.leaf(Tensor({1, 1, 2}));
    CHECK_THROWS_AS(conv1d(t, x, w, b), ShapeError);
}

TEST_CASE("maxpool1d halves length and drops the trailing element") {
    Tape t;
    NodeId y = maxpool1d(t, t.leaf(row({1, 3, 2, 5})));
    CHECK(t.value(y).data()[0] == 3);
    CHECK(t.value(y).data()[1] == 5);

    Tape t2;
    NodeId y2 = maxpool1d(t2, t2.leaf(row({1, 3, 2})));
    CHECK(t2.value(y2).shape() == Shape{1, 1, 1});
    CHECK(t2.value(y2).data()[0] == 3);

    // 12 -> 6 -> 3 -> 1 under three successive pools
    std::mt19937_64 rng(8);
    Tape t3;
    NodeId h = t3.leaf(random_tensor({1, 12, 2}, rng));
    h = maxpool1d(t3, h);
    CHECK(t3.value(h).shape().l == 6);
    h = maxpool1d(t3, h);
    CHECK(t3.value(h).shape().l == 3);
    h = maxpool1d(t3, h);
    CHECK(t3.value(h).shape().l == 1);
    CHECK_THROWS_AS(maxpool1d(t3, h), ShapeError);
}

TEST_CASE("maxpool output length is floor(L/2) for all L >= 2") {
    std::mt19937_64 rng(10);
    for (int l = 2; l <= 13; ++l) {
        Tape t;
        NodeId y = maxpool1d(t, t.leaf(random_tensor({2, l, 3}, rng)));
        CHECK(t.value(y).shape().l == l / 2);
    }
}

TEST_CASE("maxpool routes gradient to exactly one position per window, ties earlier") {
    Tape t;
    NodeId x = t.leaf(row({2, 2, 5, 1, 0, 3}));
    t.backward(sum(t, maxpool1d(t, x)));
    const Tensor& g = t.grad(x);
    CHECK(g.data()[0] == 1.0); // tie -> earlier index
    CHECK(g.data()[1] == 0.0);
    CHECK(g.data()[2] == 1.0);
    CHECK(g.data()[3] == 0.0);
    CHECK(g.data()[4] == 0.0);
    CHECK(g.data()[5] == 1.0);
}

TEST_CASE("dense matches hand matrix products") {
    Tape t;
    NodeId x = t.leaf(Tensor({1, 1, 2}, {1.0, 2.0}));
    NodeId w = t.leaf(Tensor({2, 1, 2}, {1.0, 2.0, 3.0, 4.0}));
    NodeId b = t.leaf(Tensor({1, 1, 2}, {0.5, -0.5}));
    NodeId y = dense(t, x, w, b);
    CHECK(t.value(y).data()[0] == doctest::Approx(7.5).epsilon(1e-15));
    CHECK(t.value(y).data()[1] == doctest::Approx(9.5).epsilon(1e-15));
}

TEST_CASE("dense with identity weights is the identity; zero weights broadcast the bias") {
    std::mt19937_64 rng(12);
    Tensor xv = random_tensor({3, 1, 4}, rng);
    Tensor eye({4, 1, 4});
    for (int i = 0; i < 4; ++i) eye.at(i, 0, i) = 1.0;
    Tape t;
    NodeId y = dense(t, t.leaf(xv), t.leaf(eye), t.leaf(Tensor({1, 1, 4})));
    for (std::int64_t i = 0; i < xv.size(); ++i)
        CHECK(t.value(y).data()[i] == doctest::Approx(xv.data()[i]).epsilon(1e-15));

    Tensor bias({1, 1, 4}, {1.0, 2.0, 3.0, 4.0});
    Tape t2;
    NodeId y2 = dense(t2, t2.leaf(xv), t2.leaf(Tensor({4, 1, 4})), t2.leaf(bias));
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) CHECK(t2.value(y2).at(r, 0, c) == bias.at(0, 0, c));
}

TEST_CASE("activation values") {
    Tape t;
    NodeId r = relu(t, t.leaf(row({-1, 0, 2})));
    CHECK(t.value(r).data()[0] == 0.0);
    CHECK(t.value(r).data()[1] == 0.0);
    CHECK(t.value(r).data()[2] == 2.0);

    NodeId s = sigmoid(t, t.leaf(row({0.0, std::log(3.0)})));
    CHECK(t.value(s).data()[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.value(s).data()[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("global average pool means each channel") {
    Tape t;
    Tensor x({1, 4, 2});
    for (int l = 0; l < 4; ++l) {
        x.at(0, l, 0) = 1.0;
        x.at(0, l, 1) = 2.0;
    }
    NodeId y = global_avg_pool(t, t.leaf(x));
    CHECK(t.value(y).at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(t.value(y).at(0, 0, 1) == doctest::Approx(2.0).epsilon(1e-15));

    Tape t2;
    NodeId y2 = global_avg_pool(t2, t2.leaf(row({1, 2, 3, 6})));
    CHECK(t2.value(y2).item() == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("channel_scale with ones is bitwise identity; zeros annihilate") {
    std::mt19937_64 rng(14);
    Tensor x = random_tensor({2, 5, 3}, rng);
    Tensor ones({2, 1, 3});
    ones.fill(1.0);
    Tape t;
    NodeId y = channel_scale(t, t.leaf(x), t.leaf(ones));
    for (std::int64_t i = 0; i < x.size(); ++i) CHECK(t.value(y).data()[i] == x.data()[i]);

    Tape t2;
    NodeId y2 = channel_scale(t2, t2.leaf(x), t2.leaf(Tensor({2, 1, 3})));
    for (double v : t2.value(y2).data()) CHECK(v == 0.0);

    Tape t3;
    NodeId y3 = channel_scale(t3, t3.leaf(row({2, 4})),
                              t3.leaf(Tensor({1, 1, 1}, {0.5})));
    CHECK(t3.value(y3).data()[0] == 1.0);
    CHECK(t3.value(y3).data()[1] == 2.0);
}

TEST_CASE("mse_loss hand values and positivity") {
    Tape t;
    NodeId same = mse_loss(t, t.leaf(row({1, 2, 3})), t.leaf(row({1, 2, 3})));
    CHECK(t.value(same).item() == 0.0);

    Tape t2;
    NodeId l2 = mse_loss(t2, t2.leaf(Tensor({1, 1, 1}, {2.0})), t2.leaf(Tensor({1, 1, 1}, {0.0})));
    CHECK(t2.value(l2).item() == doctest::Approx(4.0).epsilon(1e-15));

    Tape t3;
    NodeId l3 = mse_loss(t3, t3.leaf(Tensor({3, 1, 1}, {2, 2, 2})),
                         t3.leaf(Tensor({3, 1, 1}, {1, 2, 4})));
    CHECK(t3.value(l3).item() == doctest::Approx(5.0 / 3.0).epsilon(1e-15));

    std::mt19937_64 rng(16);
    Tape t4;
    Tensor a = random_tensor({4, 1, 1}, rng), b = random_tensor({4, 1, 1}, rng);
    CHECK(t4.value(mse_loss(t4, t4.leaf(a), t4.leaf(b))).item() >= 0.0);
}

TEST_CASE("every layer passes finite-difference checks at random points") {
    std::mt19937_64 rng(99);
    const double eps = 1e-5, tol = 1e-5;

    for (int trial = 0; trial < 10; ++trial) {
        // conv1d w.r.t. input, weight, bias
        Conv1dParams conv = Conv1dParams::init(2, 3, 3, rng);
        Tensor cx = random_tensor({2, 5, 2}, rng);
        CHECK(finite_diff_check(
                  [&](Tape& t, NodeId x) {
                      return sum(t, conv1d(t, x, t.leaf(conv.weight), t.leaf(conv.bias)));
                  },
                  cx, eps) < tol);
        CHECK(finite_diff_check(
                  [&](Tape& t, NodeId w) {
                      return sum(t, conv1d(t, t.leaf(cx), w, t.leaf(conv.bias)));
                  },
                  conv.weight, eps) < tol);
        CHECK(finite_diff_check(
                  [&](Tape& t, NodeId b) {
                      return sum(t, conv1d(t, t.leaf(cx), t.leaf(conv.weight), b));
                  },
                  conv.bias, eps) < tol);

        // dense w.r.t. input, weight, bias
        DenseParams lin = DenseParams::init(4, 3, rng);
        Tensor dx = random_tensor({3, 1, 4}, rng);
        CHECK(finite_diff_check(
                  [&](Tape& t, NodeId x) {
                      return sum(t, dense(t, x, t.leaf(lin.weight), t.leaf(lin.bias)));
                  },
                  dx, eps) < tol);
        CHECK(finite_diff_check(
                  [&](Tape& t, NodeId w) {
                      return sum(t, dense(t, t.leaf(dx), w, t.leaf(lin.bias)));
                  },
                  lin.weight, eps) < tol);

        // activations; sigmoid of squares exercises the chain rule
        Tensor ax = random_tensor_nonzero({2, 4, 2}, rng);
        CHECK(finite_diff_check([](Tape& t, NodeId x) { return sum(t, relu(t, x)); }, ax, eps) <
              tol);
        CHECK(finite_diff_check(
                  [](Tape& t, NodeId x) { return sum(t, sigmoid(t, mul(t, x, x))); }, ax, eps) <
              tol);

        // maxpool: window elements spread apart so eps stays off the kinks
        Tensor mx({1, 6, 2});
        for (std::int64_t i = 0; i < mx.size(); ++i)
            mx.data()[i] = uniform_range(rng, 0.0, 1.0) + 2.0 * static_cast<double>(i % 5);
        CHECK(finite_diff_check([](Tape& t, NodeId x) { return sum(t, maxpool1d(t, x)); }, mx,
                                eps) < tol);

        // global average pool, channel scale, mse
        CHECK(finite_diff_check([](Tape& t, NodeId x) { return sum(t, global_avg_pool(t, x)); },
                                random_tensor({2, 5, 3}, rng), eps) < tol);
        Tensor sx = random_tensor({2, 4, 3}, rng);
        Tensor ex = random_tensor({2, 1, 3}, rng);
        CHECK(finite_diff_check(
                  [&](Tape& t, NodeId x) { return sum(t, channel_scale(t, x, t.leaf(ex))); }, sx,
                  eps) < tol);
        CHECK(finite_diff_check(
                  [&](Tape& t, NodeId e) { return sum(t, channel_scale(t, t.leaf(sx), e)); }, ex,
                  eps) < tol);
        Tensor target = random_tensor({3, 1, 1}, rng);
        CHECK(finite_diff_check(
                  [&](Tape& t, NodeId p) { return mse_loss(t, p, t.leaf(target)); },
                  random_tensor({3, 1, 1}, rng), eps) < tol);
    }
}
