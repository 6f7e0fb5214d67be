#include "faae/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "faae/error.hpp"
#include "faae/ppm.hpp"

namespace faae {

double LatentVector::norm() const {
    double acc = 0.0;
    for (float v : values) acc += static_cast<double>(v) * v;
    return std::sqrt(acc);
}

namespace {

void draw_unit(std::size_t n, Rng& rng, std::vector<double>& scratch) {
    scratch.resize(n);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& v : scratch) {
            v = rng.normal();
            norm += v * v;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& v : scratch) v /= norm;
}

}  // namespace

LatentVector sample_unit_sphere(std::size_t n, Rng& rng) {
    if (n == 0) throw ContractError("sample_unit_sphere: dimension must be at least 1");
    std::vector<double> scratch;
    draw_unit(n, rng, scratch);
    LatentVector z;
    z.values.assign(scratch.begin(), scratch.end());
    return z;
}

template <typename T>
Tensor<T> sample_unit_sphere_batch(std::size_t count, std::size_t n, Rng& rng) {
    if (n == 0) throw ContractError("sample_unit_sphere: dimension must be at least 1");
    Tensor<T> z({count, n});
    std::vector<double> scratch;
    auto out = z.data();
    for (std::size_t i = 0; i < count; ++i) {
        draw_unit(n, rng, scratch);
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = static_cast<T>(scratch[j]);
    }
    return z;
}

template Tensor<float> sample_unit_sphere_batch<float>(std::size_t, std::size_t, Rng&);
template Tensor<double> sample_unit_sphere_batch<double>(std::size_t, std::size_t, Rng&);

std::string_view dataset_kind_name(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::gauss8: return "gauss8";
        case DatasetKind::rings2d: return "rings2d";
        case DatasetKind::sprites: return "sprites";
        case DatasetKind::image_dir: return "image_dir";
    }
    return "unknown";
}

std::span<const float> Dataset::sample(std::size_t i) const {
    if (i >= size()) throw ContractError("dataset sample index " + std::to_string(i) + " out of range");
    return std::span<const float>(values).subspan(i * sample_size(), sample_size());
}

template <typename T>
Tensor<T> Dataset::batch(std::span<const std::size_t> indices) const {
    Shape shape = sample_shape;
    shape.insert(shape.begin(), indices.size());
    Tensor<T> out(shape);
    auto dst = out.data();
    const std::size_t k = sample_size();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto src = sample(indices[i]);
        std::transform(src.begin(), src.end(), dst.begin() + static_cast<long>(i * k),
                       [](float v) { return static_cast<T>(v); });
    }
    return out;
}

template <typename T>
Tensor<T> Dataset::range(std::size_t first, std::size_t count) const {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = first + i;
    return batch<T>(idx);
}

template Tensor<float> Dataset::batch<float>(std::span<const std::size_t>) const;
template Tensor<double> Dataset::batch<double>(std::span<const std::size_t>) const;
template Tensor<float> Dataset::range<float>(std::size_t, std::size_t) const;
template Tensor<double> Dataset::range<double>(std::size_t, std::size_t) const;

Dataset make_gauss8(std::size_t count, double radius, double sigma, Rng& rng) {
    if (count < 8) throw ContractError("make_gauss8: need at least 8 samples, got " + std::to_string(count));
    if (!(sigma > 0.0)) throw ContractError("make_gauss8: sigma must be positive");
    if (!(radius > 0.0)) throw ContractError("make_gauss8: radius must be positive");
    Dataset ds;
    ds.kind = DatasetKind::gauss8;
    ds.sample_shape = {2};
    for (int k = 0; k < 8; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / 8.0;
        ds.modes.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    }
    ds.values.reserve(count * 2);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& centre = ds.modes[rng.below(8)];
        ds.values.push_back(static_cast<float>(centre[0] + sigma * rng.normal()));
        ds.values.push_back(static_cast<float>(centre[1] + sigma * rng.normal()));
    }
    return ds;
}

Dataset make_rings2d(std::size_t count, double radius, double sigma, Rng& rng) {
    if (count == 0) throw ContractError("make_rings2d: need at least one sample");
    if (!(sigma > 0.0)) throw ContractError("make_rings2d: sigma must be positive");
    Dataset ds;
    ds.kind = DatasetKind::rings2d;
    ds.sample_shape = {2};
    ds.values.reserve(count * 2);
    for (std::size_t i = 0; i < count; ++i) {
        const double r = rng.below(2) == 0 ? radius : radius / 2.0;
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        ds.values.push_back(static_cast<float>(r * std::cos(angle) + sigma * rng.normal()));
        ds.values.push_back(static_cast<float>(r * std::sin(angle) + sigma * rng.normal()));
    }
    return ds;
}

namespace {

void paint_sprite(std::size_t size, Rng& rng, float* chw) {
    const double s = static_cast<double>(size);
    const std::size_t plane = size * size;
    for (std::size_t c = 0; c < 3; ++c)
        std::fill_n(chw + c * plane, plane, static_cast<float>(rng.uniform(0.0, 0.15)));
    const std::size_t shapes = 1 + rng.below(2);
    for (std::size_t k = 0; k < shapes; ++k) {
        const std::size_t kind = rng.below(3);
        std::array<float, 3> colour;
        for (auto& v : colour) v = static_cast<float>(rng.uniform(0.3, 1.0));
        double x0 = 0, y0 = 0, x1 = 0, y1 = 0, cx = 0, cy = 0, r = 0;
        if (kind == 0) {  // disk
            r = rng.uniform(0.15, 0.3) * s;
            cx = rng.uniform(r, s - r);
            cy = rng.uniform(r, s - r);
        } else if (kind == 1) {  // square
            const double side = rng.uniform(0.3, 0.5) * s;
            x0 = rng.uniform(0.0, s - side);
            y0 = rng.uniform(0.0, s - side);
            x1 = x0 + side;
            y1 = y0 + side;
        } else {  // bar
            const double thick = rng.uniform(0.12, 0.2) * s;
            const double length = rng.uniform(0.5, 0.9) * s;
            const double a = rng.uniform(0.0, s - length), b = rng.uniform(0.0, s - thick);
            if (rng.below(2) == 0) {
                x0 = a, x1 = a + length, y0 = b, y1 = b + thick;
            } else {
                x0 = b, x1 = b + thick, y0 = a, y1 = a + length;
            }
        }
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                const bool inside = kind == 0 ? (px - cx) * (px - cx) + (py - cy) * (py - cy) <= r * r
                                              : px >= x0 && px <= x1 && py >= y0 && py <= y1;
                if (!inside) continue;
                for (std::size_t c = 0; c < 3; ++c) chw[c * plane + y * size + x] = colour[c];
            }
    }
}

}  // namespace

Dataset make_sprites(std::size_t count, std::size_t size, Rng& rng) {
    if (size != 8 && size != 16 && size != 32) {
        throw ContractError("make_sprites: unsupported size " + std::to_string(size) + " (use 8, 16 or 32)");
    }
    Dataset ds;
    ds.kind = DatasetKind::sprites;
    ds.sample_shape = {3, size, size};
    ds.values.resize(count * 3 * size * size);
    for (std::size_t i = 0; i < count; ++i) paint_sprite(size, rng, ds.values.data() + i * 3 * size * size);
    return ds;
}

Dataset load_image_dir(const std::filesystem::path& dir, const Shape& expected_shape) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw IoError(dir.string() + ": not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
    }
    if (ec) throw IoError(dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
    if (files.empty()) throw IoError(dir.string() + ": no samples");
    Dataset ds;
    ds.kind = DatasetKind::image_dir;
    ds.sample_shape = expected_shape;
    for (const auto& file : files) {
        Image img = read_ppm(file);
        const Shape shape{3, img.height, img.width};
        if (ds.sample_shape.empty()) ds.sample_shape = shape;
        if (shape != ds.sample_shape) {
            throw IoError(file.string() + ": size " + shape_string(shape) + " does not match " +
                          shape_string(ds.sample_shape));
        }
        auto chw = image_to_chw(img);
        ds.values.insert(ds.values.end(), chw.begin(), chw.end());
        ds.names.push_back(file.filename().string());
    }
    return ds;
}

std::size_t nearest_mode(const std::vector<std::array<double, 2>>& modes, double x, double y) {
    if (modes.empty()) throw ContractError("nearest_mode: no modes");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const double dx = x - modes[k][0], dy = y - modes[k][1];
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, std::size_t batch_size, Rng& rng) {
    if (batch_size == 0) throw ContractError("epoch_batches: batch size must be positive");
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < count; start += batch_size) {
        const std::size_t end = std::min(count, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
    }
    return batches;
}

}  // namespace faae
