#pragma once

// Read-only pipelines over trained networks. Every function runs the networks
// in eval mode without recording a graph.

#include <array>
#include <string>

#include "faae/data.hpp"
#include "faae/network.hpp"

namespace faae {

// G(E(x)).
Tensor<float> reconstruct(Network<float>& E, Network<float>& G, const Tensor<float>& x);

// E(x) as a [N, n] batch.
Tensor<float> encode(Network<float>& E, const Tensor<float>& x);

// `count` samples G(z) with z drawn from the unit-sphere prior.
Tensor<float> generate(Network<float>& G, std::size_t count, Rng& rng);

struct MorphWeights {
    std::array<double, 4> alphas{1.0, 0.0, 0.0, 0.0};
};

// l / |l| with l = sum_i alpha_i z_i. Anchors must be unit vectors of one
// length (ContractError otherwise); |l| <= 1e-9 raises DegeneracyError. The
// combination is formed in double precision after dividing the weights by
// their largest magnitude, so scaling all weights by c > 0 leaves the result
// unchanged; a single positive weight returns that anchor as is.
LatentVector morph(const std::array<LatentVector, 4>& anchors, const MorphWeights& weights);

// Bilinear weights of grid cell (i, j): u = i / (n - 1), v = j / (n - 1).
MorphWeights grid_weights(std::size_t i, std::size_t j, std::size_t grid_n);

// Encodes the four images (a [4, C, H, W] or [4, d] batch) and decodes the
// morph of every grid cell; cell (i, j) (column i, row j) is sample j * n + i
// of the returned [n * n, ...] batch. Corners are the reconstructions of the
// inputs in the order top-left, top-right, bottom-left, bottom-right.
Tensor<float> morph_grid(Network<float>& E, Network<float>& G, const Tensor<float>& corners, std::size_t grid_n);

// Which inputs the discriminator of a run scores.
enum class CriticSpace { data, latent, joint };

struct MetricReport {
    double recon_mse = 0.0;
    double reenc_mse = 0.0;
    double disc_accuracy = 0.0;
    std::size_t mode_coverage = 0;
    std::size_t samples_evaluated = 0;

    bool operator==(const MetricReport&) const = default;
};

std::string metric_csv_header();
std::string metric_csv_row(const MetricReport& r);

// recon_mse over `count` dataset samples (drawn without replacement, all of
// them when the dataset is smaller), reenc_mse over `count` prior draws,
// disc_accuracy over as many real and fake inputs at threshold 0.5, and for
// datasets with mixture modes the number of modes receiving at least
// count / (4 * modes) nearest-mode assignments among `count` generated points.
MetricReport evaluate(Network<float>& E, Network<float>& G, Network<float>& D, CriticSpace space,
                      const Dataset& dataset, std::size_t count, Rng& rng);

}  // namespace faae
