#include "faae/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faae/error.hpp"
#include "faae/objectives.hpp"
#include "text.hpp"

namespace faae {

namespace {

constexpr std::size_t kChunk = 256;
constexpr double kUnitTolerance = 1e-5;

Tensor<float> as_rows(const Tensor<float>& t) {
    if (t.rank() == 2) return t;
    return reshape(t, {t.dim(0), t.dim(0) ? t.numel() / t.dim(0) : 0});
}

// Applies `f` to consecutive slices of at most kChunk samples and stacks the
// results; eval-mode networks treat every sample independently.
template <typename F>
Tensor<float> chunked(const Tensor<float>& x, F f) {
    NoGradGuard guard;
    const std::size_t n = x.rank() ? x.dim(0) : 0;
    if (n <= kChunk) return f(x);
    const std::size_t per = x.numel() / n;
    std::vector<float> values;
    Shape out_shape;
    for (std::size_t first = 0; first < n; first += kChunk) {
        const std::size_t m = std::min(kChunk, n - first);
        Shape s = x.shape();
        s[0] = m;
        Tensor<float> slice(s, std::vector<float>(x.values().begin() + static_cast<std::ptrdiff_t>(first * per),
                                                  x.values().begin() + static_cast<std::ptrdiff_t>((first + m) * per)));
        const Tensor<float> y = f(slice);
        if (out_shape.empty()) out_shape = y.shape();
        values.insert(values.end(), y.values().begin(), y.values().end());
    }
    out_shape[0] = n;
    return Tensor<float>(out_shape, std::move(values));
}

void check_input(const Network<float>& net, const Tensor<float>& x, const char* what) {
    Shape expected = net.input_shape();
    expected.insert(expected.begin(), x.rank() ? x.dim(0) : 0);
    if (x.shape() != expected) {
        throw ContractError(std::string(what) + ": expected input " + shape_string(expected) + ", got " +
                            shape_string(x.shape()));
    }
}

}  // namespace

Tensor<float> encode(Network<float>& E, const Tensor<float>& x) {
    check_input(E, x, "encode");
    return chunked(x, [&](const Tensor<float>& b) { return as_rows(E.forward(b, Mode::eval)); });
}

Tensor<float> reconstruct(Network<float>& E, Network<float>& G, const Tensor<float>& x) {
    check_input(E, x, "reconstruct");
    if (shape_numel(E.output_shape()) != shape_numel(G.input_shape()) || E.input_shape() != G.output_shape()) {
        throw ContractError("reconstruct: encoder and generator are not mirrors");
    }
    return chunked(x, [&](const Tensor<float>& b) {
        Tensor<float> code = E.forward(b, Mode::eval);
        return G.forward(reshape(code, {b.dim(0), shape_numel(G.input_shape())}), Mode::eval);
    });
}

Tensor<float> generate(Network<float>& G, std::size_t count, Rng& rng) {
    const std::size_t n = shape_numel(G.input_shape());
    const Tensor<float> z = sample_unit_sphere_batch<float>(count, n, rng);
    if (count == 0) {
        Shape s = G.output_shape();
        s.insert(s.begin(), 0);
        return Tensor<float>(s, {});
    }
    return chunked(z, [&](const Tensor<float>& b) { return G.forward(b, Mode::eval); });
}

LatentVector morph(const std::array<LatentVector, 4>& anchors, const MorphWeights& weights) {
    const std::size_t n = anchors[0].size();
    if (n == 0) throw ContractError("morph: empty anchors");
    for (std::size_t k = 0; k < 4; ++k) {
        if (anchors[k].size() != n) throw ContractError("morph: anchors have different lengths");
        if (std::abs(anchors[k].norm() - 1.0) > kUnitTolerance) {
            throw ContractError("morph: anchor " + std::to_string(k + 1) + " is not a unit vector (norm " +
                                text::format_double(anchors[k].norm()) + ")");
        }
        if (!std::isfinite(weights.alphas[k])) throw ContractError("morph: weights must be finite");
    }
    double largest = 0.0;
    std::size_t nonzero = 0, which = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        largest = std::max(largest, std::abs(weights.alphas[k]));
        if (weights.alphas[k] != 0.0) {
            ++nonzero;
            which = k;
        }
    }
    if (nonzero == 0) throw DegeneracyError("morph: all weights are zero");
    if (nonzero == 1 && weights.alphas[which] > 0.0) return anchors[which];

    std::vector<double> l(n, 0.0);
    for (std::size_t k = 0; k < 4; ++k) {
        const double a = weights.alphas[k] / largest;
        if (a == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) l[i] += a * static_cast<double>(anchors[k].values[i]);
    }
    double sq = 0.0;
    for (double v : l) sq += v * v;
    const double norm = std::sqrt(sq);
    if (!(norm > 1e-9)) {
        throw DegeneracyError("morph: the weighted combination has norm " + text::format_double(norm) +
                              ", which cannot be normalised");
    }
    LatentVector out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = static_cast<float>(l[i] / norm);
    return out;
}

MorphWeights grid_weights(std::size_t i, std::size_t j, std::size_t grid_n) {
    if (grid_n < 2) throw ContractError("grid_weights: grid size must be at least 2");
    if (i >= grid_n || j >= grid_n) throw ContractError("grid_weights: cell outside the grid");
    const double u = static_cast<double>(i) / static_cast<double>(grid_n - 1);
    const double v = static_cast<double>(j) / static_cast<double>(grid_n - 1);
    return {{(1 - u) * (1 - v), u * (1 - v), (1 - u) * v, u * v}};
}

Tensor<float> morph_grid(Network<float>& E, Network<float>& G, const Tensor<float>& corners, std::size_t grid_n) {
    if (grid_n < 2) throw ContractError("morph_grid: grid size must be at least 2, got " + std::to_string(grid_n));
    if (corners.rank() == 0 || corners.dim(0) != 4) throw ContractError("morph_grid: exactly four corner inputs are required");
    const Tensor<float> codes = encode(E, corners);
    const std::size_t n = codes.dim(1);
    std::array<LatentVector, 4> anchors;
    for (std::size_t k = 0; k < 4; ++k) {
        anchors[k].values.assign(codes.values().begin() + static_cast<std::ptrdiff_t>(k * n),
                                 codes.values().begin() + static_cast<std::ptrdiff_t>((k + 1) * n));
        if (std::abs(anchors[k].norm() - 1.0) > kUnitTolerance) {
            const double norm = anchors[k].norm();
            if (!(norm > 1e-9)) throw DegeneracyError("morph_grid: corner " + std::to_string(k + 1) + " encodes to zero");
            for (float& v : anchors[k].values) v = static_cast<float>(v / norm);
        }
    }
    std::vector<float> latents;
    latents.reserve(grid_n * grid_n * n);
    for (std::size_t j = 0; j < grid_n; ++j)
        for (std::size_t i = 0; i < grid_n; ++i) {
            LatentVector z;
            try {
                z = morph(anchors, grid_weights(i, j, grid_n));
            } catch (const DegeneracyError& e) {
                throw DegeneracyError("morph_grid: cell (" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what());
            }
            latents.insert(latents.end(), z.values.begin(), z.values.end());
        }
    const Tensor<float> batch({grid_n * grid_n, n}, std::move(latents));
    return chunked(batch, [&](const Tensor<float>& b) { return G.forward(b, Mode::eval); });
}

std::string metric_csv_header() { return "recon_mse,reenc_mse,disc_accuracy,mode_coverage,samples_evaluated"; }

std::string metric_csv_row(const MetricReport& r) {
    using text::format_double;
    return format_double(r.recon_mse) + "," + format_double(r.reenc_mse) + "," + format_double(r.disc_accuracy) +
           "," + std::to_string(r.mode_coverage) + "," + std::to_string(r.samples_evaluated);
}

MetricReport evaluate(Network<float>& E, Network<float>& G, Network<float>& D, CriticSpace space,
                      const Dataset& dataset, std::size_t count, Rng& rng) {
    if (count == 0) throw ContractError("evaluate: count must be positive");
    if (dataset.size() == 0) throw ContractError("evaluate: empty dataset");
    NoGradGuard guard;
    MetricReport report;
    report.samples_evaluated = count;

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t(0));
    if (count < order.size()) {
        rng.shuffle(order);
        order.resize(count);
    }
    const Tensor<float> x = dataset.batch<float>(order);
    const Tensor<float> x_hat = reconstruct(E, G, x);
    report.recon_mse = static_cast<double>(reconstruction_loss(x, x_hat).item());

    const Tensor<float> z = sample_unit_sphere_batch<float>(count, shape_numel(G.input_shape()), rng);
    const Tensor<float> fake = chunked(z, [&](const Tensor<float>& b) { return G.forward(b, Mode::eval); });
    const Tensor<float> z_hat = encode(E, fake);
    report.reenc_mse = static_cast<double>(reencoding_loss(z, z_hat, LossNorm::l2sq).item());

    Tensor<float> real_in, fake_in;
    switch (space) {
        case CriticSpace::data:
            real_in = x;
            fake_in = fake;
            break;
        case CriticSpace::latent:
            real_in = z;
            fake_in = encode(E, x);
            break;
        case CriticSpace::joint:
            real_in = joint_input(encode(E, x), x);
            fake_in = joint_input(z, fake);
            break;
    }
    auto score = [&](const Tensor<float>& in) {
        return chunked(in, [&](const Tensor<float>& b) { return D.forward(b, Mode::eval); });
    };
    std::size_t correct = 0;
    const Tensor<float> s_real = score(real_in), s_fake = score(fake_in);
    for (float s : s_real.values()) correct += s >= 0.5f ? 1 : 0;
    for (float s : s_fake.values()) correct += s < 0.5f ? 1 : 0;
    report.disc_accuracy = static_cast<double>(correct) / static_cast<double>(s_real.numel() + s_fake.numel());

    if (!dataset.modes.empty() && dataset.sample_shape == Shape{2}) {
        std::vector<std::size_t> hits(dataset.modes.size(), 0);
        for (std::size_t i = 0; i < count; ++i) {
            ++hits[nearest_mode(dataset.modes, fake.at(2 * i), fake.at(2 * i + 1))];
        }
        for (std::size_t h : hits)
            if (4 * dataset.modes.size() * h >= count) ++report.mode_coverage;
    }
    for (double v : {report.recon_mse, report.reenc_mse, report.disc_accuracy}) {
        if (!std::isfinite(v)) throw NumericalError("evaluate: non-finite metric");
    }
    return report;
}

}  // namespace faae
