#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "faae/network.hpp"

namespace faae {

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t t = 0;
    // Moment accumulators, one vector per parameter in update order.
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    bool operator==(const AdamState&) const = default;
};

// lr0 / (1 + decay * step)
double decayed_lr(double lr0, double decay, std::uint64_t step);

// One Adam step over `params` using their gradient buffers (a parameter that
// received no gradient counts as zero). `lr` holds one rate per parameter or a
// single shared rate. Every gradient is checked before anything is touched;
// a non-finite entry raises NumericalError naming the parameter.
template <typename T>
void adam_update(std::span<const NamedTensor<T>> params, AdamState& state, std::span<const double> lr);

template <typename T>
void adam_update(std::span<const NamedTensor<T>> params, AdamState& state, double lr_t) {
    adam_update(params, state, std::span<const double>(&lr_t, 1));
}

enum class DecayMode { step, epoch };

template <typename T>
struct ParamGroup {
    std::vector<NamedTensor<T>> params;
    double lr0 = 1e-3;
};

// Adam over one or more parameter groups with inverse-time decay driven by
// the optimizer's own step count or by the epoch index (set_epoch).
template <typename T>
class Adam {
public:
    Adam() = default;
    Adam(std::string name, std::vector<ParamGroup<T>> groups, double decay, DecayMode mode = DecayMode::step);

    const std::string& name() const { return name_; }
    // Rate the next step() applies to group g.
    double current_lr(std::size_t g = 0) const;
    void set_epoch(std::uint64_t epoch) { epoch_ = epoch; }
    void zero_grad();
    void step();

    const std::vector<NamedTensor<T>>& params() const { return flat_; }
    AdamState& state() { return state_; }
    const AdamState& state() const { return state_; }

private:
    std::string name_;
    std::vector<ParamGroup<T>> groups_;
    std::vector<NamedTensor<T>> flat_;
    std::vector<std::size_t> group_of_;
    double decay_ = 0.0;
    DecayMode mode_ = DecayMode::step;
    std::uint64_t epoch_ = 0;
    AdamState state_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace faae
