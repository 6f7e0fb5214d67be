#pragma once

#include <functional>
#include <vector>

#include "faae/tensor.hpp"

namespace faae {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_leaf = 0;
    std::size_t worst_index = 0;
    std::size_t coordinates = 0;
};

// Compares reverse-mode gradients of `f` against central finite differences
// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every coordinate of every
// leaf. `f` must rebuild its graph from the current leaf values on each call.
// The per-coordinate error is |analytic - numeric| / max(1, |analytic|, |numeric|).
// Throws NumericalError naming the coordinate when any value is non-finite.
GradCheckResult grad_check(const std::function<Tensor<double>()>& f,
                           std::vector<Tensor<double>> leaves, double eps = 1e-4);

double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f, Tensor<double> x,
                  double eps = 1e-4);

}  // namespace faae
