#include "faae/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "faae/error.hpp"
#include "kernels.hpp"

namespace faae {

namespace {

template <typename T>
void require_rank(const Tensor<T>& a, std::size_t rank, const char* op) {
    if (a.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             ", got shape " + shape_string(a.shape()));
    }
}

// Elementwise binary op with single-element broadcast on either side.
// `fwd(x, y)` computes the value, `dx(x, y)` / `dy(x, y)` the partials.
template <typename T, typename F, typename DX, typename DY>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, std::string_view op, F fwd, DX dx, DY dy) {
    const bool same = a.shape() == b.shape();
    const bool a_scalar = a.numel() == 1 && !same;
    const bool b_scalar = b.numel() == 1 && !same;
    if (!same && !a_scalar && !b_scalar) {
        throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                             shape_string(b.shape()) + " are incompatible");
    }
    const Shape shape = a_scalar ? b.shape() : a.shape();
    const std::size_t n = shape_numel(shape);
    std::vector<T> out(n);
    const T* av = a.data().data();
    const T* bv = b.data().data();
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[a_scalar ? 0 : i], bv[b_scalar ? 0 : i]);
    return Tensor<T>::make_result(
        shape, std::move(out), op, {a, b},
        [a, b, a_scalar, b_scalar, dx, dy](const TensorData<T>& o) {
            Tensor<T> ta = a, tb = b;
            const T* av = ta.data().data();
            const T* bv = tb.data().data();
            const std::size_t n = o.grad.size();
            if (ta.requires_grad()) {
                auto g = ta.grad();
                for (std::size_t i = 0; i < n; ++i) {
                    const T x = av[a_scalar ? 0 : i], y = bv[b_scalar ? 0 : i];
                    g[a_scalar ? 0 : i] += o.grad[i] * dx(x, y);
                }
            }
            if (tb.requires_grad()) {
                auto g = tb.grad();
                for (std::size_t i = 0; i < n; ++i) {
                    const T x = av[a_scalar ? 0 : i], y = bv[b_scalar ? 0 : i];
                    g[b_scalar ? 0 : i] += o.grad[i] * dy(x, y);
                }
            }
        });
}

// Elementwise unary op whose derivative is expressed through input x and
// output y.
template <typename T, typename F, typename D>
Tensor<T> unary(const Tensor<T>& a, std::string_view op, F fwd, D deriv) {
    const std::size_t n = a.numel();
    std::vector<T> out(n);
    const T* av = a.data().data();
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
    return Tensor<T>::make_result(a.shape(), std::move(out), op, {a},
                                  [a, deriv](const TensorData<T>& o) {
                                      Tensor<T> ta = a;
                                      auto g = ta.grad();
                                      const T* av = ta.data().data();
                                      for (std::size_t i = 0; i < g.size(); ++i)
                                          g[i] += o.grad[i] * deriv(av[i], o.value[i]);
                                  });
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: shapes " + shape_string(a.shape()) + " and " +
                             shape_string(b.shape()) + " do not agree");
    }
    const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
    std::vector<T> out(m * p, T(0));
    kernels::gemm_nn(m, p, k, a.data().data(), b.data().data(), out.data());
    return Tensor<T>::make_result({m, p}, std::move(out), "matmul", {a, b},
                                  [a, b, m, k, p](const TensorData<T>& o) {
                                      Tensor<T> ta = a, tb = b;
                                      if (ta.requires_grad()) {
                                          std::vector<T> scratch;
                                          kernels::gemm_nt(m, k, p, o.grad.data(), tb.data().data(),
                                                           ta.grad().data(), scratch);
                                      }
                                      if (tb.requires_grad()) {
                                          kernels::gemm_tn(k, p, m, ta.data().data(), o.grad.data(),
                                                           tb.grad().data());
                                      }
                                  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return binary(
        a, b, "add", [](T x, T y) { return x + y; }, [](T, T) { return T(1); },
        [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return binary(
        a, b, "sub", [](T x, T y) { return x - y; }, [](T, T) { return T(1); },
        [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return binary(
        a, b, "mul", [](T x, T y) { return x * y; }, [](T, T y) { return y; },
        [](T x, T) { return x; });
}

template <typename T>
Tensor<T> negate(const Tensor<T>& a) {
    return unary(a, "negate", [](T x) { return -x; }, [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
    return unary(a, "square", [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
    for (std::size_t i = 0; i < a.numel(); ++i) {
        if (!(a.data()[i] > T(0))) {
            throw DomainError("log: non-positive input " + std::to_string(a.data()[i]) +
                              " at index " + std::to_string(i));
        }
    }
    return unary(a, "log", [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> log_clamped(const Tensor<T>& a, double floor) {
    const T f = static_cast<T>(floor);
    for (std::size_t i = 0; i < a.numel(); ++i)
        SmoothnessProbe::report(std::abs(static_cast<double>(a.data()[i]) - floor));
    return unary(
        a, "log_clamped", [f](T x) { return std::log(std::max(x, f)); },
        [f](T x, T) { return x > f ? T(1) / x : T(0); });
}

template <typename T>
Tensor<T> sqrt(const Tensor<T>& a) {
    for (std::size_t i = 0; i < a.numel(); ++i) {
        if (a.data()[i] < T(0)) {
            throw DomainError("sqrt: negative input at index " + std::to_string(i));
        }
        SmoothnessProbe::report(static_cast<double>(a.data()[i]));
    }
    return unary(
        a, "sqrt", [](T x) { return std::sqrt(x); },
        [](T, T y) { return y > T(0) ? T(0.5) / y : T(0); });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, double factor) {
    const T c = static_cast<T>(factor);
    return unary(a, "scale", [c](T x) { return c * x; }, [c](T, T) { return c; });
}

template <typename T>
Tensor<T> subtract_from(double c, const Tensor<T>& a) {
    const T cv = static_cast<T>(c);
    return unary(a, "subtract_from", [cv](T x) { return cv - x; }, [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    return reduce_sum(a, {});
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
    return reduce_mean(a, {});
}

namespace {

struct Reduction {
    Shape out_shape;
    std::vector<std::size_t> out_index;  // output slot of every input element
    std::size_t count = 1;               // inputs per output slot
};

Reduction plan_reduction(const Shape& shape, std::vector<std::size_t> axes) {
    if (axes.empty()) {
        axes.resize(shape.size());
        for (std::size_t i = 0; i < shape.size(); ++i) axes[i] = i;
    }
    std::vector<bool> reduced(shape.size(), false);
    for (std::size_t ax : axes) {
        if (ax >= shape.size() || reduced[ax]) {
            throw DimensionError("reduce: invalid axis " + std::to_string(ax) + " for shape " +
                                 shape_string(shape));
        }
        reduced[ax] = true;
    }
    Reduction r;
    std::vector<std::size_t> out_stride(shape.size(), 0);
    std::size_t stride = 1;
    for (std::size_t i = shape.size(); i-- > 0;) {
        if (reduced[i]) {
            r.count *= shape[i];
        } else {
            out_stride[i] = stride;
            stride *= shape[i];
        }
    }
    for (std::size_t i = 0; i < shape.size(); ++i)
        if (!reduced[i]) r.out_shape.push_back(shape[i]);
    const std::size_t n = shape_numel(shape);
    r.out_index.resize(n);
    std::vector<std::size_t> idx(shape.size(), 0);
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t o = 0;
        for (std::size_t d = 0; d < shape.size(); ++d) o += idx[d] * out_stride[d];
        r.out_index[flat] = o;
        for (std::size_t d = shape.size(); d-- > 0;) {
            if (++idx[d] < shape[d]) break;
            idx[d] = 0;
        }
    }
    return r;
}

template <typename T>
Tensor<T> reduce(const Tensor<T>& a, const std::vector<std::size_t>& axes, bool average) {
    auto plan = std::make_shared<Reduction>(plan_reduction(a.shape(), axes));
    if (average && (a.numel() == 0 || plan->count == 0)) {
        throw DomainError("reduce_mean: empty tensor of shape " + shape_string(a.shape()));
    }
    const std::size_t out_n = shape_numel(plan->out_shape);
    std::vector<T> out(out_n, T(0));
    const T* av = a.data().data();
    for (std::size_t i = 0; i < a.numel(); ++i) out[plan->out_index[i]] += av[i];
    const T factor = average ? T(1) / static_cast<T>(plan->count) : T(1);
    if (average)
        for (T& v : out) v *= factor;
    return Tensor<T>::make_result(plan->out_shape, std::move(out),
                                  average ? "reduce_mean" : "reduce_sum", {a},
                                  [a, plan, factor](const TensorData<T>& o) {
                                      Tensor<T> ta = a;
                                      auto g = ta.grad();
                                      for (std::size_t i = 0; i < g.size(); ++i)
                                          g[i] += o.grad[plan->out_index[i]] * factor;
                                  });
}

}  // namespace

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& a, const std::vector<std::size_t>& axes) {
    return reduce(a, axes, true);
}

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& a, const std::vector<std::size_t>& axes) {
    return reduce(a, axes, false);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    return unary(
        a, "sigmoid",
        [](T x) {
            if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
            const T e = std::exp(x);
            return e / (T(1) + e);
        },
        [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, double slope) {
    if (!(slope >= 0.0 && slope < 1.0)) {
        throw ContractError("leaky_relu: slope must lie in [0,1), got " + std::to_string(slope));
    }
    const T s = static_cast<T>(slope);
    for (std::size_t i = 0; i < a.numel(); ++i)
        SmoothnessProbe::report(std::abs(static_cast<double>(a.data()[i])));
    return unary(
        a, "leaky_relu", [s](T x) { return x >= T(0) ? x : s * x; },
        [s](T x, T) { return x >= T(0) ? T(1) : s; });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw DimensionError("reshape: cannot view " + shape_string(a.shape()) + " as " +
                             shape_string(shape));
    }
    std::vector<T> out(a.data().begin(), a.data().end());
    return Tensor<T>::make_result(std::move(shape), std::move(out), "reshape", {a},
                                  [a](const TensorData<T>& o) {
                                      Tensor<T> ta = a;
                                      auto g = ta.grad();
                                      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                                  });
}

template <typename T>
Tensor<T> concat_columns(const Tensor<T>& a, const Tensor<T>& b) {
    require_rank(a, 2, "concat_columns");
    require_rank(b, 2, "concat_columns");
    if (a.dim(0) != b.dim(0)) {
        throw DimensionError("concat_columns: row counts differ in " + shape_string(a.shape()) +
                             " and " + shape_string(b.shape()));
    }
    const std::size_t rows = a.dim(0), ca = a.dim(1), cb = b.dim(1), c = ca + cb;
    std::vector<T> out(rows * c);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(a.data().data() + r * ca, ca, out.data() + r * c);
        std::copy_n(b.data().data() + r * cb, cb, out.data() + r * c + ca);
    }
    return Tensor<T>::make_result({rows, c}, std::move(out), "concat_columns", {a, b},
                                  [a, b, rows, ca, cb, c](const TensorData<T>& o) {
                                      Tensor<T> ta = a, tb = b;
                                      if (ta.requires_grad()) {
                                          auto g = ta.grad();
                                          for (std::size_t r = 0; r < rows; ++r)
                                              for (std::size_t j = 0; j < ca; ++j)
                                                  g[r * ca + j] += o.grad[r * c + j];
                                      }
                                      if (tb.requires_grad()) {
                                          auto g = tb.grad();
                                          for (std::size_t r = 0; r < rows; ++r)
                                              for (std::size_t j = 0; j < cb; ++j)
                                                  g[r * cb + j] += o.grad[r * c + ca + j];
                                      }
                                  });
}

template <typename T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& b) {
    if (x.rank() < 2 || b.rank() != 1 || b.dim(0) != x.dim(1)) {
        throw DimensionError("add_channel_bias: bias " + shape_string(b.shape()) +
                             " does not match input " + shape_string(x.shape()));
    }
    const std::size_t batch = x.dim(0), channels = x.dim(1);
    const std::size_t inner = batch == 0 ? 0 : x.numel() / (batch * channels);
    std::vector<T> out(x.data().begin(), x.data().end());
    const T* bv = b.data().data();
    for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t ch = 0; ch < channels; ++ch) {
            T* p = out.data() + (n * channels + ch) * inner;
            for (std::size_t i = 0; i < inner; ++i) p[i] += bv[ch];
        }
    return Tensor<T>::make_result(x.shape(), std::move(out), "add_channel_bias", {x, b},
                                  [x, b, batch, channels, inner](const TensorData<T>& o) {
                                      Tensor<T> tx = x, tb = b;
                                      if (tx.requires_grad()) {
                                          auto g = tx.grad();
                                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                                      }
                                      if (tb.requires_grad()) {
                                          auto g = tb.grad();
                                          for (std::size_t n = 0; n < batch; ++n)
                                              for (std::size_t ch = 0; ch < channels; ++ch) {
                                                  const T* p = o.grad.data() + (n * channels + ch) * inner;
                                                  T acc = T(0);
                                                  for (std::size_t i = 0; i < inner; ++i) acc += p[i];
                                                  g[ch] += acc;
                                              }
                                      }
                                  });
}

template <typename T>
Tensor<T> row_norm(const Tensor<T>& a) {
    require_rank(a, 2, "row_norm");
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    std::vector<T> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        T acc = T(0);
        for (std::size_t j = 0; j < cols; ++j) acc += a.data()[r * cols + j] * a.data()[r * cols + j];
        out[r] = std::sqrt(acc);
        SmoothnessProbe::report(static_cast<double>(out[r]));
    }
    return Tensor<T>::make_result({rows}, std::move(out), "row_norm", {a},
                                  [a, rows, cols](const TensorData<T>& o) {
                                      Tensor<T> ta = a;
                                      auto g = ta.grad();
                                      const T* av = ta.data().data();
                                      for (std::size_t r = 0; r < rows; ++r) {
                                          const T nrm = o.value[r];
                                          if (nrm == T(0)) continue;
                                          for (std::size_t j = 0; j < cols; ++j)
                                              g[r * cols + j] += o.grad[r] * av[r * cols + j] / nrm;
                                      }
                                  });
}

template <typename T>
Tensor<T> normalize_rows(const Tensor<T>& a) {
    require_rank(a, 2, "normalize_rows");
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    auto norms = std::make_shared<std::vector<T>>(rows);
    std::vector<T> out(a.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        T acc = T(0);
        for (std::size_t j = 0; j < cols; ++j) acc += a.data()[r * cols + j] * a.data()[r * cols + j];
        const T nrm = std::max(std::sqrt(acc), std::numeric_limits<T>::min());
        (*norms)[r] = nrm;
        SmoothnessProbe::report(static_cast<double>(nrm));
        for (std::size_t j = 0; j < cols; ++j) out[r * cols + j] = a.data()[r * cols + j] / nrm;
    }
    return Tensor<T>::make_result(a.shape(), std::move(out), "normalize_rows", {a},
                                  [a, rows, cols, norms](const TensorData<T>& o) {
                                      Tensor<T> ta = a;
                                      auto g = ta.grad();
                                      // d(x/|x|) = (I - y y^T) / |x|
                                      for (std::size_t r = 0; r < rows; ++r) {
                                          const T* y = o.value.data() + r * cols;
                                          const T* gy = o.grad.data() + r * cols;
                                          T dot = T(0);
                                          for (std::size_t j = 0; j < cols; ++j) dot += y[j] * gy[j];
                                          for (std::size_t j = 0; j < cols; ++j)
                                              g[r * cols + j] += (gy[j] - y[j] * dot) / (*norms)[r];
                                      }
                                  });
}

#define FAAE_INSTANTIATE_OPS(T)                                                          \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                       \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                          \
    template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                          \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                          \
    template Tensor<T> negate(const Tensor<T>&);                                         \
    template Tensor<T> square(const Tensor<T>&);                                         \
    template Tensor<T> log(const Tensor<T>&);                                            \
    template Tensor<T> log_clamped(const Tensor<T>&, double);                            \
    template Tensor<T> sqrt(const Tensor<T>&);                                           \
    template Tensor<T> scale(const Tensor<T>&, double);                                  \
    template Tensor<T> subtract_from(double, const Tensor<T>&);                          \
    template Tensor<T> sum(const Tensor<T>&);                                            \
    template Tensor<T> mean(const Tensor<T>&);                                           \
    template Tensor<T> reduce_mean(const Tensor<T>&, const std::vector<std::size_t>&);   \
    template Tensor<T> reduce_sum(const Tensor<T>&, const std::vector<std::size_t>&);    \
    template Tensor<T> sigmoid(const Tensor<T>&);                                        \
    template Tensor<T> leaky_relu(const Tensor<T>&, double);                             \
    template Tensor<T> reshape(const Tensor<T>&, Shape);                                 \
    template Tensor<T> concat_columns(const Tensor<T>&, const Tensor<T>&);               \
    template Tensor<T> add_channel_bias(const Tensor<T>&, const Tensor<T>&);             \
    template Tensor<T> row_norm(const Tensor<T>&);                                       \
    template Tensor<T> normalize_rows(const Tensor<T>&);

FAAE_INSTANTIATE_OPS(float)
FAAE_INSTANTIATE_OPS(double)

#undef FAAE_INSTANTIATE_OPS

}  // namespace faae
