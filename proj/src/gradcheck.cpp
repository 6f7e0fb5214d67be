#include "faae/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "faae/error.hpp"

namespace faae {

namespace {

double evaluate(const std::function<Tensor<double>()>& f, std::size_t leaf, std::size_t index) {
    Tensor<double> out;
    {
        NoGradGuard guard;
        out = f();
    }
    if (out.numel() != 1) {
        throw ContractError("grad_check: function must return a scalar, got shape " +
                            shape_string(out.shape()));
    }
    const double v = out.item();
    if (!std::isfinite(v)) {
        throw NumericalError("grad_check: non-finite function value at leaf " + std::to_string(leaf) +
                             " coordinate " + std::to_string(index));
    }
    return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor<double>()>& f,
                           std::vector<Tensor<double>> leaves, double eps) {
    if (!(eps > 0.0)) throw ContractError("grad_check: eps must be positive");
    for (auto& leaf : leaves) {
        if (!leaf.is_leaf()) throw ContractError("grad_check: inputs must be leaf tensors");
        leaf.set_requires_grad(true);
        leaf.zero_grad();
    }
    Tensor<double> loss = f();
    if (loss.numel() != 1) {
        throw ContractError("grad_check: function must return a scalar, got shape " +
                            shape_string(loss.shape()));
    }
    backward(loss);

    for (std::size_t l = 0; l < leaves.size(); ++l) {
        const auto& leaf = leaves[l];
        for (std::size_t i = 0; i < leaf.numel(); ++i) {
            const bool bad_grad = leaf.has_grad() && !std::isfinite(leaf.grad()[i]);
            if (!std::isfinite(leaf.at(i)) || bad_grad) {
                throw NumericalError("grad_check: non-finite value or gradient at leaf " + std::to_string(l) +
                                     " coordinate " + std::to_string(i));
            }
        }
    }
    if (!std::isfinite(loss.item())) throw NumericalError("grad_check: non-finite function value at the base point");

    GradCheckResult result;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
        auto& leaf = leaves[l];
        std::vector<double> analytic(leaf.numel(), 0.0);
        if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), analytic.begin());
        auto values = leaf.data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i]) || !std::isfinite(analytic[i])) {
                throw NumericalError("grad_check: non-finite value or gradient at leaf " +
                                     std::to_string(l) + " coordinate " + std::to_string(i));
            }
            const double saved = values[i];
            values[i] = saved + eps;
            const double plus = evaluate(f, l, i);
            values[i] = saved - eps;
            const double minus = evaluate(f, l, i);
            values[i] = saved;
            const double numeric = (plus - minus) / (2.0 * eps);
            const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
            const double err = std::abs(analytic[i] - numeric) / denom;
            if (err > result.max_relative_error) {
                result.max_relative_error = err;
                result.worst_leaf = l;
                result.worst_index = i;
            }
            ++result.coordinates;
        }
    }
    return result;
}

double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f, Tensor<double> x,
                  double eps) {
    return grad_check([&] { return f(x); }, {x}, eps).max_relative_error;
}

}  // namespace faae
