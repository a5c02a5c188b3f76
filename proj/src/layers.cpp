#include "odtte/layers.hpp"

#include <cmath>
#include <cstring>

#include "blas.hpp"
#include "odtte/util.hpp"

namespace odtte {

void glorot_fill(Tensor& w, int fan_in, int fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w.data())
        v = uniform_range(rng, -limit, limit);
}

Conv1dParams Conv1dParams::init(int in_ch, int out_ch, int ksize, std::mt19937_64& rng) {
    Conv1dParams p;
    p.weight = Tensor(Shape{ksize, in_ch, out_ch});
    p.bias = Tensor(Shape{1, 1, out_ch});
    glorot_fill(p.weight, ksize * in_ch, ksize * out_ch, rng);
    return p;
}

DenseParams DenseParams::init(int n_in, int n_out, std::mt19937_64& rng) {
    DenseParams p;
    p.weight = Tensor(Shape{n_in, 1, n_out});
    p.bias = Tensor(Shape{1, 1, n_out});
    glorot_fill(p.weight, n_in, n_out, rng);
    return p;
}

// Patch matrix for the stride-1 same-padded cross-correlation:
// rows index (b,l), columns index (k,c); out-of-range taps stay zero.
static std::vector<double> im2col(const Tensor& x, int ksize) {
    const int B = x.shape().b, L = x.shape().l, C = x.shape().c;
    const int off = ksize / 2;
    std::vector<double> cols(static_cast<size_t>(B) * L * ksize * C, 0.0);
    for (int b = 0; b < B; ++b) {
        for (int l = 0; l < L; ++l) {
            const size_t row = (static_cast<size_t>(b) * L + l) * ksize * C;
            for (int k = 0; k < ksize; ++k) {
                const int src = l + k - off;
                if (src >= 0 && src < L)
                    std::memcpy(&cols[row + static_cast<size_t>(k) * C],
                                x.raw() + (static_cast<size_t>(b) * L + src) * C,
                                sizeof(double) * C);
            }
        }
    }
    return cols;
}

static void col2im_add(const std::vector<double>& cols, int ksize, Tensor& dx) {
    const int B = dx.shape().b, L = dx.shape().l, C = dx.shape().c;
    const int off = ksize / 2;
    for (int b = 0; b < B; ++b) {
        for (int l = 0; l < L; ++l) {
            const size_t row = (static_cast<size_t>(b) * L + l) * ksize * C;
            for (int k = 0; k < ksize; ++k) {
                const int src = l + k - off;
                if (src < 0 || src >= L) continue;
                double* dst = &dx.at(b, src, 0);
                const double* s = &cols[row + static_cast<size_t>(k) * C];
                for (int c = 0; c < C; ++c) dst[c] += s[c];
            }
        }
    }
}

NodeId conv1d(Tape& t, NodeId x, NodeId weight, NodeId bias) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(weight);
    const Tensor& bv = t.value(bias);
    const int B = xv.shape().b, L = xv.shape().l, C_in = xv.shape().c;
    const int K = wv.shape().b, C_out = wv.shape().c;
    if (K % 2 == 0)
        throw ShapeError("conv1d kernel size must be odd, got " + std::to_string(K));
    if (wv.shape().l != C_in)
        throw ShapeError("conv1d channel mismatch: input has " + std::to_string(C_in) +
                         " channels, kernel expects " + std::to_string(wv.shape().l));
    if (bv.shape() != Shape{1, 1, C_out})
        throw ShapeError("conv1d bias shape " + bv.shape().str() + " != (1,1," + std::to_string(C_out) + ")");

    std::vector<double> cols = im2col(xv, K);
    Tensor y(Shape{B, L, C_out});
    const int rows = B * L, kc = K * C_in;
    detail::gemm(false, false, rows, C_out, kc, 1.0, cols.data(), kc, wv.raw(), C_out, 0.0,
                 y.raw(), C_out);
    for (int r = 0; r < rows; ++r) {
        double* dst = y.raw() + static_cast<size_t>(r) * C_out;
        for (int c = 0; c < C_out; ++c) dst[c] += bv.raw()[c];
    }

    return t.record(std::move(y), {x, weight, bias}, [x, weight, bias, K](Tape& tp, NodeId self) {
        const Tensor& xv2 = tp.value(x);
        const Tensor& wv2 = tp.value(weight);
        const Tensor& dy = tp.grad(self);
        const int B2 = xv2.shape().b, L2 = xv2.shape().l, Ci = xv2.shape().c;
        const int Co = wv2.shape().c;
        const int rows2 = B2 * L2, kc2 = K * Ci;

        std::vector<double> cols2 = im2col(xv2, K);
        // dW += cols^T * dY
        detail::gemm(true, false, kc2, Co, rows2, 1.0, cols2.data(), kc2, dy.raw(), Co, 1.0,
                     tp.grad_mut(weight).raw(), Co);
        // db += column sums of dY
        double* db = tp.grad_mut(bias).raw();
        for (int r = 0; r < rows2; ++r) {
            const double* src = dy.raw() + static_cast<size_t>(r) * Co;
            for (int c = 0; c < Co; ++c) db[c] += src[c];
        }
        // dX via dcols = dY * W^T, scattered back
        std::vector<double> dcols(static_cast<size_t>(rows2) * kc2);
        detail::gemm(false, true, rows2, kc2, Co, 1.0, dy.raw(), Co, wv2.raw(), Co, 0.0,
                     dcols.data(), kc2);
        col2im_add(dcols, K, tp.grad_mut(x));
    });
}

NodeId maxpool1d(Tape& t, NodeId x) {
    const Tensor& xv = t.value(x);
    const int B = xv.shape().b, L = xv.shape().l, C = xv.shape().c;
    if (L < 2)
        throw ShapeError("maxpool1d requires length >= 2, got " + std::to_string(L));
    const int Lo = L / 2; // trailing element dropped when L is odd

    Tensor y(Shape{B, Lo, C});
    std::vector<std::int32_t> argmax(static_cast<size_t>(B) * Lo * C);
    size_t idx = 0;
    for (int b = 0; b < B; ++b) {
        for (int lo = 0; lo < Lo; ++lo) {
            for (int c = 0; c < C; ++c, ++idx) {
                const int l0 = 2 * lo;
                const double v0 = xv.at(b, l0, c), v1 = xv.at(b, l0 + 1, c);
                // ties keep the earlier index for a deterministic backward
                if (v1 > v0) {
                    y.at(b, lo, c) = v1;
                    argmax[idx] = l0 + 1;
                } else {
                    y.at(b, lo, c) = v0;
                    argmax[idx] = l0;
                }
            }
        }
    }

    return t.record(std::move(y), {x}, [x, argmax = std::move(argmax)](Tape& tp, NodeId self) {
        const Tensor& dy = tp.grad(self);
        Tensor& dx = tp.grad_mut(x);
        const int B2 = dy.shape().b, Lo2 = dy.shape().l, C2 = dy.shape().c;
        size_t i = 0;
        for (int b = 0; b < B2; ++b)
            for (int lo = 0; lo < Lo2; ++lo)
                for (int c = 0; c < C2; ++c, ++i)
                    dx.at(b, argmax[i], c) += dy.at(b, lo, c);
    });
}

static void check_dense_input(const Tensor& xv, const Tensor& wv) {
    if (xv.shape().l != 1)
        throw ShapeError("dense expects (B,1,n) input, got " + xv.shape().str());
    if (xv.shape().c != wv.shape().b)
        throw ShapeError("dense shape mismatch: input width " + std::to_string(xv.shape().c) +
                         ", weights expect " + std::to_string(wv.shape().b));
}

static void dense_backward(Tape& tp, NodeId self, NodeId x, NodeId weight, NodeId bias) {
    const Tensor& xv = tp.value(x);
    const Tensor& wv = tp.value(weight);
    const Tensor& dy = tp.grad(self);
    const int B = xv.shape().b, n_in = xv.shape().c, n_out = wv.shape().c;

    // dW += X^T dY
    detail::gemm(true, false, n_in, n_out, B, 1.0, xv.raw(), n_in, dy.raw(), n_out, 1.0,
                 tp.grad_mut(weight).raw(), n_out);
    // dX += dY W^T
    detail::gemm(false, true, B, n_in, n_out, 1.0, dy.raw(), n_out, wv.raw(), n_out, 1.0,
                 tp.grad_mut(x).raw(), n_in);
    if (bias >= 0) {
        double* db = tp.grad_mut(bias).raw();
        for (int r = 0; r < B; ++r) {
            const double* src = dy.raw() + static_cast<size_t>(r) * n_out;
            for (int c = 0; c < n_out; ++c) db[c] += src[c];
        }
    }
}

NodeId dense(Tape& t, NodeId x, NodeId weight, NodeId bias) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(weight);
    const Tensor& bv = t.value(bias);
    check_dense_input(xv, wv);
    const int B = xv.shape().b, n_in = xv.shape().c, n_out = wv.shape().c;
    if (bv.shape() != Shape{1, 1, n_out})
        throw ShapeError("dense bias shape " + bv.shape().str() + " != (1,1," + std::to_string(n_out) + ")");

    Tensor y(Shape{B, 1, n_out});
    detail::gemm(false, false, B, n_out, n_in, 1.0, xv.raw(), n_in, wv.raw(), n_out, 0.0,
                 y.raw(), n_out);
    for (int r = 0; r < B; ++r) {
        double* dst = y.raw() + static_cast<size_t>(r) * n_out;
        for (int c = 0; c < n_out; ++c) dst[c] += bv.raw()[c];
    }
    return t.record(std::move(y), {x, weight, bias}, [x, weight, bias](Tape& tp, NodeId self) {
        dense_backward(tp, self, x, weight, bias);
    });
}

NodeId dense_nobias(Tape& t, NodeId x, NodeId weight) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(weight);
    check_dense_input(xv, wv);
    const int B = xv.shape().b, n_in = xv.shape().c, n_out = wv.shape().c;
    Tensor y(Shape{B, 1, n_out});
    detail::gemm(false, false, B, n_out, n_in, 1.0, xv.raw(), n_in, wv.raw(), n_out, 0.0,
                 y.raw(), n_out);
    return t.record(std::move(y), {x, weight}, [x, weight](Tape& tp, NodeId self) {
        dense_backward(tp, self, x, weight, -1);
    });
}

NodeId relu(Tape& t, NodeId x) {
    Tensor y = t.value(x);
    for (double& v : y.data())
        if (v < 0.0) v = 0.0;
    return t.record(std::move(y), {x}, [x](Tape& tp, NodeId self) {
        const Tensor& xv = tp.value(x);
        const Tensor& dy = tp.grad(self);
        Tensor& dx = tp.grad_mut(x);
        for (std::int64_t i = 0; i < xv.size(); ++i)
            if (xv.data()[i] > 0.0) dx.data()[i] += dy.data()[i]; // subgradient at 0 is 0
    });
}

static double stable_sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

NodeId sigmoid(Tape& t, NodeId x) {
    Tensor y = t.value(x);
    for (double& v : y.data()) v = stable_sigmoid(v);
    return t.record(std::move(y), {x}, [x](Tape& tp, NodeId self) {
        const Tensor& yv = tp.value(self);
        const Tensor& dy = tp.grad(self);
        Tensor& dx = tp.grad_mut(x);
        for (std::int64_t i = 0; i < yv.size(); ++i) {
            const double s = yv.data()[i];
            dx.data()[i] += dy.data()[i] * s * (1.0 - s);
        }
    });
}

NodeId global_avg_pool(Tape& t, NodeId x) {
    const Tensor& xv = t.value(x);
    const int B = xv.shape().b, L = xv.shape().l, C = xv.shape().c;
    Tensor y(Shape{B, 1, C});
    for (int b = 0; b < B; ++b)
        for (int l = 0; l < L; ++l)
            for (int c = 0; c < C; ++c)
                y.at(b, 0, c) += xv.at(b, l, c);
    const double inv = 1.0 / L;
    for (double& v : y.data()) v *= inv;
    return t.record(std::move(y), {x}, [x, inv](Tape& tp, NodeId self) {
        const Tensor& dy = tp.grad(self);
        Tensor& dx = tp.grad_mut(x);
        const int B2 = dx.shape().b, L2 = dx.shape().l, C2 = dx.shape().c;
        for (int b = 0; b < B2; ++b)
            for (int l = 0; l < L2; ++l)
                for (int c = 0; c < C2; ++c)
                    dx.at(b, l, c) += dy.at(b, 0, c) * inv;
    });
}

NodeId channel_scale(Tape& t, NodeId x, NodeId excite) {
    const Tensor& xv = t.value(x);
    const Tensor& ev = t.value(excite);
    const int B = xv.shape().b, L = xv.shape().l, C = xv.shape().c;
    if (ev.shape() != Shape{B, 1, C})
        throw ShapeError("channel_scale expects excitation (B,1,C) = (" + std::to_string(B) +
                         ",1," + std::to_string(C) + "), got " + ev.shape().str());
    Tensor y(xv.shape());
    for (int b = 0; b < B; ++b)
        for (int l = 0; l < L; ++l)
            for (int c = 0; c < C; ++c)
                y.at(b, l, c) = xv.at(b, l, c) * ev.at(b, 0, c);
    return t.record(std::move(y), {x, excite}, [x, excite](Tape& tp, NodeId self) {
        const Tensor& xv2 = tp.value(x);
        const Tensor& ev2 = tp.value(excite);
        const Tensor& dy = tp.grad(self);
        Tensor& dx = tp.grad_mut(x);
        Tensor& de = tp.grad_mut(excite);
        const int B2 = xv2.shape().b, L2 = xv2.shape().l, C2 = xv2.shape().c;
        for (int b = 0; b < B2; ++b)
            for (int l = 0; l < L2; ++l)
                for (int c = 0; c < C2; ++c) {
                    dx.at(b, l, c) += dy.at(b, l, c) * ev2.at(b, 0, c);
                    de.at(b, 0, c) += dy.at(b, l, c) * xv2.at(b, l, c);
                }
    });
}

NodeId flatten(Tape& t, NodeId x) {
    const Tensor& xv = t.value(x);
    const Shape s = xv.shape();
    Tensor y = xv.reshaped(Shape{s.b, 1, s.l * s.c});
    return t.record(std::move(y), {x}, [x](Tape& tp, NodeId self) {
        const Tensor& dy = tp.grad(self);
        Tensor& dx = tp.grad_mut(x);
        for (std::int64_t i = 0; i < dx.size(); ++i)
            dx.data()[i] += dy.data()[i]; // identical flat layout
    });
}

NodeId add(Tape& t, NodeId a, NodeId b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (av.shape() != bv.shape())
        throw ShapeError("add shape mismatch " + av.shape().str() + " vs " + bv.shape().str());
    Tensor y = av;
    for (std::int64_t i = 0; i < y.size(); ++i) y.data()[i] += bv.data()[i];
    return t.record(std::move(y), {a, b}, [a, b](Tape& tp, NodeId self) {
        const Tensor& dy = tp.grad(self);
        Tensor& da = tp.grad_mut(a);
        Tensor& db = tp.grad_mut(b);
        for (std::int64_t i = 0; i < dy.size(); ++i) {
            da.data()[i] += dy.data()[i];
            db.data()[i] += dy.data()[i];
        }
    });
}

NodeId mse_loss(Tape& t, NodeId pred, NodeId target) {
    const Tensor& pv = t.value(pred);
    const Tensor& tv = t.value(target);
    if (pv.shape() != tv.shape())
        throw ContractError("mse_loss shape mismatch " + pv.shape().str() + " vs " + tv.shape().str());
    const int B = pv.shape().b;
    double acc = 0.0;
    for (std::int64_t i = 0; i < pv.size(); ++i) {
        const double d = pv.data()[i] - tv.data()[i];
        acc += d * d;
    }
    Tensor y = Tensor::scalar(acc / B);
    return t.record(std::move(y), {pred, target}, [pred, target, B](Tape& tp, NodeId self) {
        const double dl = tp.grad(self).item() * 2.0 / B;
        const Tensor& pv2 = tp.value(pred);
        const Tensor& tv2 = tp.value(target);
        Tensor& dp = tp.grad_mut(pred);
        Tensor& dt = tp.grad_mut(target);
        for (std::int64_t i = 0; i < pv2.size(); ++i) {
            const double d = pv2.data()[i] - tv2.data()[i];
            dp.data()[i] += dl * d;
            dt.data()[i] -= dl * d;
        }
    });
}

NodeId mul(Tape& t, NodeId a, NodeId b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (av.shape() != bv.shape())
        throw ShapeError("mul shape mismatch " + av.shape().str() + " vs " + bv.shape().str());
    Tensor y = av;
    for (std::int64_t i = 0; i < y.size(); ++i) y.data()[i] *= bv.data()[i];
    return t.record(std::move(y), {a, b}, [a, b](Tape& tp, NodeId self) {
        const Tensor& av2 = tp.value(a);
        const Tensor& bv2 = tp.value(b);
        const Tensor& dy = tp.grad(self);
        Tensor& da = tp.grad_mut(a);
        Tensor& db = tp.grad_mut(b);
        for (std::int64_t i = 0; i < dy.size(); ++i) {
            da.data()[i] += dy.data()[i] * bv2.data()[i];
            db.data()[i] += dy.data()[i] * av2.data()[i];
        }
    });
}

NodeId scale(Tape& t, NodeId a, double k) {
    Tensor y = t.value(a);
    for (double& v : y.data()) v *= k;
    return t.record(std::move(y), {a}, [a, k](Tape& tp, NodeId self) {
        const Tensor& dy = tp.grad(self);
        Tensor& da = tp.grad_mut(a);
        for (std::int64_t i = 0; i < dy.size(); ++i) da.data()[i] += k * dy.data()[i];
    });
}

NodeId sum(Tape& t, NodeId x) {
    const Tensor& xv = t.value(x);
    double acc = 0.0;
    for (double v : xv.data()) acc += v;
    return t.record(Tensor::scalar(acc), {x}, [x](Tape& tp, NodeId self) {
        const double dl = tp.grad(self).item();
        Tensor& dx = tp.grad_mut(x);
        for (double& v : dx.data()) v += dl;
    });
}

} // namespace odtte
