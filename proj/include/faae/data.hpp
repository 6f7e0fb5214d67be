#pragma once

// Latent prior and desk-scale datasets.

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faae/rng.hpp"
#include "faae/tensor.hpp"

namespace faae {

struct LatentVector {
    std::vector<float> values;

    std::size_t size() const { return values.size(); }
    double norm() const;
};

// Standard normal draw conditioned on unit norm (uniform on the sphere S^{n-1}).
LatentVector sample_unit_sphere(std::size_t n, Rng& rng);

// `count` prior draws stacked into a [count, n] tensor.
template <typename T>
Tensor<T> sample_unit_sphere_batch(std::size_t count, std::size_t n, Rng& rng);

enum class DatasetKind { gauss8, rings2d, sprites, image_dir };

std::string_view dataset_kind_name(DatasetKind kind);

struct Dataset {
    DatasetKind kind = DatasetKind::gauss8;
    Shape sample_shape;                       // [2] or [3, H, W]
    std::vector<float> values;                // samples back to back
    std::vector<std::array<double, 2>> modes;  // mixture centres (gauss8 only)
    std::vector<std::string> names;           // source files (image_dir only)

    std::size_t sample_size() const { return shape_numel(sample_shape); }
    std::size_t size() const { return sample_size() == 0 ? 0 : values.size() / sample_size(); }
    bool is_image() const { return sample_shape.size() == 3; }
    std::span<const float> sample(std::size_t i) const;

    // Stacks the selected samples into [indices.size(), sample_shape...].
    template <typename T>
    Tensor<T> batch(std::span<const std::size_t> indices) const;
    template <typename T>
    Tensor<T> range(std::size_t first, std::size_t count) const;
};

// Equal-weight mixture of 8 isotropic Gaussians centred on a circle of the
// given radius at angles 2*pi*k/8.
Dataset make_gauss8(std::size_t count, double radius, double sigma, Rng& rng);

// Two concentric noisy rings of radius `radius` and `radius / 2`.
Dataset make_rings2d(std::size_t count, double radius, double sigma, Rng& rng);

// size x size RGB images (stored CHW) of one or two coloured primitives (disk,
// square, bar) on a dark background; size must be 8, 16 or 32.
Dataset make_sprites(std::size_t count, std::size_t size, Rng& rng);

// Every *.ppm file in `dir` (P6, maxval 255), ordered by file-name bytes and
// scaled to [0,1]. `expected_shape` ([3,H,W]) may be empty, in which case the
// first file fixes it.
Dataset load_image_dir(const std::filesystem::path& dir, const Shape& expected_shape = {});

// Index of the mode nearest to `point`.
std::size_t nearest_mode(const std::vector<std::array<double, 2>>& modes, double x, double y);

// Shuffled mini-batch partition of [0, count): every index appears exactly
// once per epoch; the last batch holds the remainder.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, std::size_t batch_size, Rng& rng);

}  // namespace faae
