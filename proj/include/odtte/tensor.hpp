#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "odtte/errors.hpp"

namespace odtte {

// Rank-3 shape (batch, length, channels). Rank-2/rank-1 data uses the
// degenerate forms {n, 1, m} and {1, 1, 1}. Parameter tensors reuse the
// same container with their own axis meanings (e.g. conv kernels are
// {ksize, in_ch, out_ch}).
struct Shape {
    int b = 1;
    int l = 1;
    int c = 1;

    std::int64_t size() const { return static_cast<std::int64_t>(b) * l * c; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape s); // zero-filled
    Tensor(Shape s, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({1, 1, 1}, {v}); }
    // (rows, cols) matrix as the degenerate rank-3 {rows, 1, cols}
    static Tensor matrix(int rows, int cols) { return Tensor(Shape{rows, 1, cols}); }

    const Shape& shape() const { return shape_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    double& at(int b, int l, int c) {
        return data_[(static_cast<size_t>(b) * shape_.l + l) * shape_.c + c];
    }
    double at(int b, int l, int c) const {
        return data_[(static_cast<size_t>(b) * shape_.l + l) * shape_.c + c];
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    double* raw() { return data_.data(); }
    const double* raw() const { return data_.data(); }

    // New view with identical flat contents; total size must be preserved.
    Tensor reshaped(Shape s) const;

    double item() const; // requires size() == 1
    bool all_finite() const;
    void fill(double v);

private:
    Shape shape_{1, 1, 1};
    std::vector<double> data_ = {0.0};
};

} // namespace odtte
