#include "odtte/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace odtte {

std::string Shape::str() const {
    return "(" + std::to_string(b) + "," + std::to_string(l) + "," + std::to_string(c) + ")";
}

static void check_shape(const Shape& s) {
    if (s.b < 1 || s.l < 1 || s.c < 1)
        throw ShapeError("invalid tensor shape " + s.str());
}

Tensor::Tensor(Shape s) : shape_(s) {
    check_shape(s);
    data_.assign(static_cast<size_t>(s.size()), 0.0);
}

Tensor::Tensor(Shape s, std::vector<double> data) : shape_(s), data_(std::move(data)) {
    check_shape(s);
    if (static_cast<std::int64_t>(data_.size()) != s.size())
        throw ShapeError("data size " + std::to_string(data_.size()) + " does not match shape " + s.str());
}

Tensor Tensor::reshaped(Shape s) const {
    if (s.size() != shape_.size())
        throw ShapeError("reshape " + shape_.str() + " -> " + s.str() + " changes element count");
    return Tensor(s, data_);
}

double Tensor::item() const {
    if (size() != 1)
        throw ShapeError("item() on non-scalar tensor " + shape_.str());
    return data_[0];
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

} // namespace odtte
