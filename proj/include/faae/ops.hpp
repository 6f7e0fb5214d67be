#pragma once

// Differentiable tensor operations. Every function records a graph node when
// one of its inputs requires gradients (see Tensor::make_result).

#include <vector>

#include "faae/tensor.hpp"

namespace faae {

// Floor applied by log_clamped; keeps log terms finite for saturated sigmoids.
inline constexpr double kLogFloor = 1e-7;

// [m x k] . [k x p] -> [m x p]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// Binary elementwise ops accept identical shapes or a single-element operand
// on either side, which is broadcast.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> negate(const Tensor<T>& a);
template <typename T>
Tensor<T> square(const Tensor<T>& a);
// Throws DomainError on any non-positive element.
template <typename T>
Tensor<T> log(const Tensor<T>& a);
// log(max(a, floor)); the gradient is zero where the floor is active.
template <typename T>
Tensor<T> log_clamped(const Tensor<T>& a, double floor = kLogFloor);
template <typename T>
Tensor<T> sqrt(const Tensor<T>& a);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, double factor);
// c - a
template <typename T>
Tensor<T> subtract_from(double c, const Tensor<T>& a);

template <typename T>
Tensor<T> sum(const Tensor<T>& a);
template <typename T>
Tensor<T> mean(const Tensor<T>& a);
// Mean over the listed axes, which are removed from the result shape. An empty
// axis list reduces over everything.
template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& a, const std::vector<std::size_t>& axes);
template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& a, const std::vector<std::size_t>& axes);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a);
// x if x >= 0 else slope * x; the derivative at 0 is taken as 1.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, double slope);

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape);
// Concatenates two rank-2 tensors along axis 1.
template <typename T>
Tensor<T> concat_columns(const Tensor<T>& a, const Tensor<T>& b);
// Adds b[C] along axis 1 of x[N, C, ...].
template <typename T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& b);

// Euclidean norm of every row of a rank-2 tensor: [N, k] -> [N].
template <typename T>
Tensor<T> row_norm(const Tensor<T>& a);
// Divides every row of a rank-2 tensor by its Euclidean norm.
template <typename T>
Tensor<T> normalize_rows(const Tensor<T>& a);

}  // namespace faae
