#pragma once

// Builders for the generator, encoder and discriminators.
//
// conv generator:  dense -> reshape [w_S, s, s] -> batchnorm -> leaky_relu,
//                  then per stage (widest first) upsample x2 -> conv3x3 ->
//                  batchnorm -> leaky_relu, then conv3x3 to the data channels
//                  -> sigmoid.
// conv encoder:    the same stages in reverse with max-pooling in place of
//                  upsampling, then flatten -> dense to the latent size ->
//                  unit-sphere projection.
// conv critic:     encoder stages -> flatten -> dense 1 -> sigmoid.
// mlp variants replace the stages with dense + leaky_relu layers and exist so
// that two-dimensional toy data trains in seconds.

#include <vector>

#include "faae/network.hpp"

namespace faae {

enum class Arch { conv, mlp };

struct ModelSpec {
    std::size_t latent_dim = 2;
    Shape data_shape{2};                // [d] or [C, H, W]
    std::vector<std::size_t> widths{128, 128};  // conv channels per stage / mlp hidden sizes
    Arch arch = Arch::mlp;
    bool encoder_normalize = true;
    // Hidden sizes of the latent-space and joint-space discriminators.
    std::vector<std::size_t> critic_hidden{64, 64};

    // Throws ConfigError for inconsistent specs (e.g. an image size that is
    // not reachable by doubling from the seed resolution).
    void validate() const;
    std::size_t data_size() const { return shape_numel(data_shape); }
};

template <typename T>
Network<T> build_generator(const ModelSpec& spec, Rng& rng);
template <typename T>
Network<T> build_encoder(const ModelSpec& spec, Rng& rng);
// Data-space discriminator (f-AAE and GAN).
template <typename T>
Network<T> build_discriminator(const ModelSpec& spec, Rng& rng);
// Latent-space discriminator (AAE).
template <typename T>
Network<T> build_latent_discriminator(const ModelSpec& spec, Rng& rng);
// Discriminator over concatenated [latent, flattened data] rows (BiGAN).
template <typename T>
Network<T> build_joint_discriminator(const ModelSpec& spec, Rng& rng);

// True iff the encoder consumes what the generator produces and emits a code
// of the generator's input size.
template <typename T>
bool mirror_check(const Network<T>& generator, const Network<T>& encoder);

}  // namespace faae
