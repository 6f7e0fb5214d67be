#pragma once

// Randomised finite-difference checks of every differentiable building block
// in double precision.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace faae {

struct OpCheck {
    std::string op;
    std::size_t instances = 0;
    double max_error = 0.0;
    // Draws discarded because an input sat within kKinkMargin of a point where
    // the op is not differentiable.
    std::size_t rejected = 0;
};

inline constexpr double kKinkMargin = 1e-3;

// matmul, conv2d, upsample2d, maxpool2d, batchnorm, leaky_relu, sigmoid,
// dense, normalize, reencoding_loss, reconstruction_loss, gan_value,
// faae_value, aae_value, bigan_value.
const std::vector<std::string>& gradcheck_ops();

// Throws ContractError for unknown op names.
OpCheck check_op(std::string_view op, std::size_t instances, std::uint64_t seed, double eps = 1e-4);

std::vector<OpCheck> run_gradcheck_suite(const std::vector<std::string>& ops, std::size_t instances,
                                         std::uint64_t seed, double eps = 1e-4);

}  // namespace faae
