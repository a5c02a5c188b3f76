#pragma once

#include <random>

#include "odtte/tensor.hpp"
#include "odtte/util.hpp"

namespace odtte::testing {

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(s);
    for (double& v : t.data()) v = uniform_range(rng, lo, hi);
    return t;
}

// Random values kept away from zero, for kink-free ReLU finite differences.
inline Tensor random_tensor_nonzero(Shape s, std::mt19937_64& rng, double margin = 0.05) {
    Tensor t(s);
    for (double& v : t.data()) {
        double x;
        do {
            x = uniform_range(rng, -1.0, 1.0);
        } while (std::fabs(x) < margin);
        v = x;
    }
    return t;
}

} // namespace odtte::testing
