#include "faae/optim.hpp"

#include <cmath>
#include <utility>

#include "faae/error.hpp"

namespace faae {

double decayed_lr(double lr0, double decay, std::uint64_t step) {
    return lr0 / (1.0 + decay * static_cast<double>(step));
}

template <typename T>
void adam_update(std::span<const NamedTensor<T>> params, AdamState& state, std::span<const double> lr) {
    if (lr.size() != 1 && lr.size() != params.size()) {
        throw ContractError("adam_update: " + std::to_string(lr.size()) + " rates for " +
                            std::to_string(params.size()) + " parameters");
    }
    for (double r : lr)
        if (!(r > 0.0) || !std::isfinite(r)) throw ContractError("adam_update: learning rate must be positive");
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.tensor.numel(), 0.0);
            state.v.emplace_back(p.tensor.numel(), 0.0);
        }
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ContractError("adam_update: state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                            std::to_string(params.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& p = params[k];
        if (state.m[k].size() != p.tensor.numel() || state.v[k].size() != p.tensor.numel()) {
            throw ContractError("adam_update: accumulator shape mismatch for " + p.name);
        }
        const auto g = p.tensor.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!std::isfinite(static_cast<double>(g[i]))) {
                throw NumericalError("adam_update: non-finite gradient in " + p.name + " at index " +
                                     std::to_string(i));
            }
        }
    }

    ++state.t;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor<T> tensor = params[k].tensor;
        const auto g = std::as_const(tensor).grad();
        auto w = tensor.data();
        auto& m = state.m[k];
        auto& v = state.v[k];
        const double rate = lr.size() == 1 ? lr[0] : lr[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g.empty() ? 0.0 : static_cast<double>(g[i]);
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            w[i] = static_cast<T>(static_cast<double>(w[i]) - rate * m_hat / (std::sqrt(v_hat) + state.epsilon));
        }
    }
}

template <typename T>
Adam<T>::Adam(std::string name, std::vector<ParamGroup<T>> groups, double decay, DecayMode mode)
    : name_(std::move(name)), groups_(std::move(groups)), decay_(decay), mode_(mode) {
    if (decay_ < 0.0 || !std::isfinite(decay_)) throw ConfigError(name_ + ": decay must be non-negative");
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (!(groups_[g].lr0 > 0.0)) throw ConfigError(name_ + ": learning rates must be positive");
        for (const auto& p : groups_[g].params) {
            flat_.push_back(p);
            group_of_.push_back(g);
        }
    }
}

template <typename T>
double Adam<T>::current_lr(std::size_t g) const {
    const std::uint64_t clock = mode_ == DecayMode::step ? state_.t : epoch_;
    return decayed_lr(groups_.at(g).lr0, decay_, clock);
}

template <typename T>
void Adam<T>::zero_grad() {
    for (auto& p : flat_) p.tensor.zero_grad();
}

template <typename T>
void Adam<T>::step() {
    std::vector<double> rates;
    rates.reserve(flat_.size());
    for (std::size_t g : group_of_) rates.push_back(current_lr(g));
    try {
        adam_update<T>(flat_, state_, rates);
    } catch (const NumericalError& e) {
        throw NumericalError(name_ + " optimizer: " + e.what());
    }
}

template void adam_update<float>(std::span<const NamedTensor<float>>, AdamState&, std::span<const double>);
template void adam_update<double>(std::span<const NamedTensor<double>>, AdamState&, std::span<const double>);
template class Adam<float>;
template class Adam<double>;

}  // namespace faae
