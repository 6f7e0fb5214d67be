#pragma once

// Training objectives. Every builder returns graph-connected scalar tensors;
// which tensor drives which parameter group is fixed by the trainer:
//   adv_d           maximised by the discriminator (the trainer minimises -adv_d)
//   adv_g           non-saturating adversarial loss of the generator side
//   distance        re-encoding (f-AAE, BiGAN diagnostic) or reconstruction (AAE)
//   generator_total weight_adv * adv_g + alpha * distance

#include "faae/network.hpp"
#include "faae/ops.hpp"

namespace faae {

enum class LossNorm { l2, l2sq };

struct LossReport {
    double adv_d = 0.0;
    double adv_g = 0.0;
    double recon_or_reenc = 0.0;
    double total_weighted = 0.0;
    double alpha = 0.0;

    bool operator==(const LossReport&) const = default;
};

struct LossWeights {
    double alpha = 100.0;
    double weight_adv = 0.1;
    LossNorm norm = LossNorm::l2sq;
};

template <typename T>
struct ObjectiveTerms {
    Tensor<T> adv_d;
    Tensor<T> adv_g;
    Tensor<T> distance;
    Tensor<T> generator_total;
    LossReport report;
};

// l2sq: batch mean of |z - z_hat|^2 / n.  l2: batch mean of |z - z_hat|.
template <typename T>
Tensor<T> reencoding_loss(const Tensor<T>& z, const Tensor<T>& z_hat, LossNorm norm = LossNorm::l2sq);

// Mean over batch and pixels of (x - x_hat)^2.
template <typename T>
Tensor<T> reconstruction_loss(const Tensor<T>& x, const Tensor<T>& x_hat);

template <typename T>
struct AdversarialTerms {
    Tensor<T> adv_d;  // mean log D(real) + mean log(1 - D(fake))
    Tensor<T> adv_g;  // -mean log D(fake)
};

// Scores are clamped below at kLogFloor inside every log.
template <typename T>
AdversarialTerms<T> gan_value(const Tensor<T>& d_real, const Tensor<T>& d_fake);

// x_hat = G(z), z_hat = E(x_hat); D scores x and x_hat.
template <typename T>
ObjectiveTerms<T> faae_value(Network<T>& G, Network<T>& E, Network<T>& D, const Tensor<T>& x,
                             const Tensor<T>& z, const LossWeights& weights, Mode mode = Mode::train);

// Plain GAN over the same inputs; distance is identically zero.
template <typename T>
ObjectiveTerms<T> gan_objective(Network<T>& G, Network<T>& D, const Tensor<T>& x, const Tensor<T>& z,
                                const LossWeights& weights, Mode mode = Mode::train);

// z_hat = E(x), x_hat = G(z_hat); the latent discriminator scores z and z_hat.
// adv_g is the encoder's non-saturating loss -mean log D(z_hat).
template <typename T>
ObjectiveTerms<T> aae_value(Network<T>& G, Network<T>& E, Network<T>& D_latent, const Tensor<T>& x,
                            const Tensor<T>& z, const LossWeights& weights, Mode mode = Mode::train);

// Rows fed to the joint discriminator: concatenation of latent and flattened
// data, i.e. D(E(x), x) and D(z, G(z)).
template <typename T>
Tensor<T> joint_input(const Tensor<T>& latent, const Tensor<T>& data);

// adv_g = -mean log(1 - D(E(x), x)) - mean log D(z, G(z)) for G and E jointly.
// distance is the re-encoding error of z, computed without a graph.
template <typename T>
ObjectiveTerms<T> bigan_value(Network<T>& G, Network<T>& E, Network<T>& D_joint, const Tensor<T>& x,
                              const Tensor<T>& z, const LossWeights& weights, Mode mode = Mode::train);

}  // namespace faae
