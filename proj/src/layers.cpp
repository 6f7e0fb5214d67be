#include "faae/layers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "faae/error.hpp"
#include "faae/ops.hpp"
#include "kernels.hpp"
#include "text.hpp"

namespace faae {

namespace {

constexpr std::pair<LayerKind, std::string_view> kKindNames[] = {
    {LayerKind::dense, "dense"},         {LayerKind::conv2d, "conv2d"},
    {LayerKind::upsample2d, "upsample2d"}, {LayerKind::maxpool2d, "maxpool2d"},
    {LayerKind::batchnorm, "batchnorm"}, {LayerKind::leaky_relu, "leaky_relu"},
    {LayerKind::sigmoid, "sigmoid"},     {LayerKind::flatten, "flatten"},
    {LayerKind::reshape, "reshape"},     {LayerKind::normalize, "normalize"},
};

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
    for (auto [k, name] : kKindNames)
        if (k == kind) return name;
    return "unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
    for (auto [k, n] : kKindNames)
        if (n == name) return k;
    return std::nullopt;
}

LayerSpec LayerSpec::Dense(std::size_t units) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.units = units;
    return s;
}

LayerSpec LayerSpec::Conv2d(std::size_t filters, std::size_t kernel, std::size_t stride,
                            std::optional<std::size_t> padding) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.units = filters;
    s.kernel = kernel;
    s.stride = stride;
    s.padding = padding.value_or(kernel / 2);
    return s;
}

LayerSpec LayerSpec::Upsample2d(std::size_t factor) {
    LayerSpec s;
    s.kind = LayerKind::upsample2d;
    s.factor = factor;
    return s;
}

LayerSpec LayerSpec::MaxPool2d(std::size_t window, std::size_t stride) {
    LayerSpec s;
    s.kind = LayerKind::maxpool2d;
    s.kernel = window;
    s.stride = stride;
    return s;
}

LayerSpec LayerSpec::BatchNorm(double momentum, double epsilon) {
    LayerSpec s;
    s.kind = LayerKind::batchnorm;
    s.momentum = momentum;
    s.epsilon = epsilon;
    return s;
}

LayerSpec LayerSpec::LeakyRelu(double slope) {
    LayerSpec s;
    s.kind = LayerKind::leaky_relu;
    s.slope = slope;
    return s;
}

LayerSpec LayerSpec::Sigmoid() {
    LayerSpec s;
    s.kind = LayerKind::sigmoid;
    return s;
}

LayerSpec LayerSpec::Flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
}

LayerSpec LayerSpec::Reshape(Shape target) {
    LayerSpec s;
    s.kind = LayerKind::reshape;
    s.target = std::move(target);
    return s;
}

LayerSpec LayerSpec::Normalize() {
    LayerSpec s;
    s.kind = LayerKind::normalize;
    return s;
}

void LayerSpec::validate() const {
    auto fail = [&](const std::string& what) {
        throw ContractError(std::string(layer_kind_name(kind)) + ": " + what);
    };
    switch (kind) {
        case LayerKind::dense:
            if (units == 0) fail("units must be positive");
            break;
        case LayerKind::conv2d:
            if (units == 0) fail("filters must be positive");
            if (kernel < 1) fail("kernel size must be at least 1");
            if (stride < 1) fail("stride must be at least 1");
            break;
        case LayerKind::upsample2d:
            if (factor < 1) fail("scale factor must be at least 1");
            break;
        case LayerKind::maxpool2d:
            if (kernel < 1) fail("window must be at least 1");
            if (stride < 1) fail("stride must be at least 1");
            break;
        case LayerKind::batchnorm:
            if (!(momentum >= 0.0 && momentum <= 1.0)) fail("momentum must lie in [0,1]");
            if (!(epsilon > 0.0)) fail("epsilon must be positive");
            break;
        case LayerKind::leaky_relu:
            if (!(slope >= 0.0 && slope < 1.0)) fail("slope must lie in [0,1)");
            break;
        case LayerKind::reshape:
            if (target.empty()) fail("target shape must not be empty");
            for (std::size_t d : target)
                if (d == 0) fail("target dimensions must be positive");
            break;
        case LayerKind::sigmoid:
        case LayerKind::flatten:
        case LayerKind::normalize:
            break;
    }
}

std::string to_string(const LayerSpec& spec) {
    std::ostringstream out;
    out << layer_kind_name(spec.kind);
    switch (spec.kind) {
        case LayerKind::dense:
            out << " units=" << spec.units;
            break;
        case LayerKind::conv2d:
            out << " filters=" << spec.units << " kernel=" << spec.kernel << " stride=" << spec.stride
                << " padding=" << spec.padding;
            break;
        case LayerKind::upsample2d:
            out << " factor=" << spec.factor;
            break;
        case LayerKind::maxpool2d:
            out << " window=" << spec.kernel << " stride=" << spec.stride;
            break;
        case LayerKind::batchnorm:
            out << " momentum=" << text::format_double(spec.momentum)
                << " epsilon=" << text::format_double(spec.epsilon);
            break;
        case LayerKind::leaky_relu:
            out << " slope=" << text::format_double(spec.slope);
            break;
        case LayerKind::reshape:
            out << " shape=" << text::format_dims(spec.target);
            break;
        case LayerKind::sigmoid:
        case LayerKind::flatten:
        case LayerKind::normalize:
            break;
    }
    return out.str();
}

LayerSpec parse_layer_spec(std::string_view line) {
    auto words = text::split_whitespace(line);
    if (words.empty()) throw IoError("empty layer description");
    auto kind = parse_layer_kind(words[0]);
    if (!kind) throw IoError("unknown layer kind '" + std::string(words[0]) + "'");
    LayerSpec spec;
    spec.kind = *kind;
    for (std::size_t i = 1; i < words.size(); ++i) {
        const auto eq = words[i].find('=');
        if (eq == std::string_view::npos) throw IoError("malformed layer field '" + std::string(words[i]) + "'");
        const std::string_view key = words[i].substr(0, eq);
        const std::string_view value = words[i].substr(eq + 1);
        if (key == "units" || key == "filters") spec.units = text::parse_size(value);
        else if (key == "kernel" || key == "window") spec.kernel = text::parse_size(value);
        else if (key == "stride") spec.stride = text::parse_size(value);
        else if (key == "padding") spec.padding = text::parse_size(value);
        else if (key == "factor") spec.factor = text::parse_size(value);
        else if (key == "slope") spec.slope = text::parse_double(value);
        else if (key == "momentum") spec.momentum = text::parse_double(value);
        else if (key == "epsilon") spec.epsilon = text::parse_double(value);
        else if (key == "shape") spec.target = text::parse_dims(value);
        else throw IoError("unknown layer field '" + std::string(key) + "'");
    }
    spec.validate();
    return spec;
}

Shape infer_output_shape(const LayerSpec& spec, const Shape& in) {
    spec.validate();
    auto fail = [&](const std::string& what) {
        throw DimensionError(std::string(layer_kind_name(spec.kind)) + ": " + what + " (input " +
                             shape_string(in) + ")");
    };
    switch (spec.kind) {
        case LayerKind::dense:
            if (in.size() != 1) fail("expects a flat input");
            return {spec.units};
        case LayerKind::conv2d: {
            if (in.size() != 3) fail("expects a [C,H,W] input");
            const std::size_t h = in[1] + 2 * spec.padding, w = in[2] + 2 * spec.padding;
            if (h < spec.kernel || w < spec.kernel) fail("kernel larger than padded input");
            return {spec.units, (h - spec.kernel) / spec.stride + 1, (w - spec.kernel) / spec.stride + 1};
        }
        case LayerKind::upsample2d:
            if (in.size() != 3) fail("expects a [C,H,W] input");
            return {in[0], in[1] * spec.factor, in[2] * spec.factor};
        case LayerKind::maxpool2d:
            if (in.size() != 3) fail("expects a [C,H,W] input");
            if (in[1] < spec.kernel || in[2] < spec.kernel) fail("window larger than input");
            return {in[0], (in[1] - spec.kernel) / spec.stride + 1, (in[2] - spec.kernel) / spec.stride + 1};
        case LayerKind::batchnorm:
            if (in.size() != 1 && in.size() != 3) fail("expects [C] or [C,H,W] input");
            return in;
        case LayerKind::leaky_relu:
        case LayerKind::sigmoid:
            return in;
        case LayerKind::flatten:
            return {shape_numel(in)};
        case LayerKind::reshape:
            if (shape_numel(spec.target) != shape_numel(in)) fail("target " + shape_string(spec.target) + " has a different size");
            return spec.target;
        case LayerKind::normalize:
            if (in.size() != 1) fail("expects a flat input");
            return in;
    }
    fail("unhandled layer kind");
    return {};
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
    if (x.rank() != 2 || weight.rank() != 2 || bias.rank() != 1 || x.dim(1) != weight.dim(0) ||
        bias.dim(0) != weight.dim(1)) {
        throw DimensionError("dense: input " + shape_string(x.shape()) + ", weight " +
                             shape_string(weight.shape()) + ", bias " + shape_string(bias.shape()) +
                             " do not agree");
    }
    return add_channel_bias(matmul(x, weight), bias);
}

namespace {

struct ConvGeometry {
    std::size_t batch, channels, height, width;
    std::size_t filters, kernel, stride, padding;
    std::size_t out_h, out_w;
    std::size_t col_rows() const { return channels * kernel * kernel; }
    std::size_t col_cols() const { return out_h * out_w; }
};

template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* col) {
    const std::size_t cols = g.col_cols();
    for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t ki = 0; ki < g.kernel; ++ki)
            for (std::size_t kj = 0; kj < g.kernel; ++kj) {
                T* row = col + ((c * g.kernel + ki) * g.kernel + kj) * cols;
                const T* plane = x + c * g.height * g.width;
                for (std::size_t oh = 0; oh < g.out_h; ++oh) {
                    const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.padding);
                    T* dst = row + oh * g.out_w;
                    if (ih < 0 || ih >= static_cast<long>(g.height)) {
                        std::fill_n(dst, g.out_w, T(0));
                        continue;
                    }
                    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
                        const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.padding);
                        dst[ow] = (iw < 0 || iw >= static_cast<long>(g.width)) ? T(0) : plane[ih * g.width + iw];
                    }
                }
            }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, T* dx) {
    const std::size_t cols = g.col_cols();
    for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t ki = 0; ki < g.kernel; ++ki)
            for (std::size_t kj = 0; kj < g.kernel; ++kj) {
                const T* row = col + ((c * g.kernel + ki) * g.kernel + kj) * cols;
                T* plane = dx + c * g.height * g.width;
                for (std::size_t oh = 0; oh < g.out_h; ++oh) {
                    const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.padding);
                    if (ih < 0 || ih >= static_cast<long>(g.height)) continue;
                    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
                        const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.padding);
                        if (iw < 0 || iw >= static_cast<long>(g.width)) continue;
                        plane[ih * g.width + iw] += row[oh * g.out_w + ow];
                    }
                }
            }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias,
                         std::size_t stride, std::size_t padding) {
    if (x.rank() != 4 || kernel.rank() != 4 || bias.rank() != 1 || kernel.dim(1) != x.dim(1) ||
        kernel.dim(2) != kernel.dim(3) || bias.dim(0) != kernel.dim(0)) {
        throw DimensionError("conv2d: input " + shape_string(x.shape()) + ", kernel " +
                             shape_string(kernel.shape()) + ", bias " + shape_string(bias.shape()) +
                             " do not agree");
    }
    if (stride < 1) throw ContractError("conv2d: stride must be at least 1");
    ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), kernel.dim(0), kernel.dim(2), stride, padding, 0, 0};
    if (g.height + 2 * padding < g.kernel || g.width + 2 * padding < g.kernel) {
        throw DimensionError("conv2d: kernel " + shape_string(kernel.shape()) +
                             " larger than padded input " + shape_string(x.shape()));
    }
    g.out_h = (g.height + 2 * padding - g.kernel) / stride + 1;
    g.out_w = (g.width + 2 * padding - g.kernel) / stride + 1;

    const std::size_t rows = g.col_rows(), cols = g.col_cols();
    const std::size_t in_size = g.channels * g.height * g.width, out_size = g.filters * cols;
    auto col = std::make_shared<std::vector<T>>(g.batch * rows * cols);
    std::vector<T> out(g.batch * out_size, T(0));
    const T* kv = kernel.data().data();
    const T* bv = bias.data().data();
    for (std::size_t n = 0; n < g.batch; ++n) {
        T* cn = col->data() + n * rows * cols;
        im2col(g, x.data().data() + n * in_size, cn);
        T* on = out.data() + n * out_size;
        for (std::size_t f = 0; f < g.filters; ++f) std::fill_n(on + f * cols, cols, bv[f]);
        kernels::gemm_nn(g.filters, cols, rows, kv, cn, on);
    }
    return Tensor<T>::make_result(
        {g.batch, g.filters, g.out_h, g.out_w}, std::move(out), "conv2d", {x, kernel, bias},
        [x, kernel, bias, g, col](const TensorData<T>& o) {
            Tensor<T> tx = x, tk = kernel, tb = bias;
            const std::size_t rows = g.col_rows(), cols = g.col_cols();
            const std::size_t in_size = g.channels * g.height * g.width, out_size = g.filters * cols;
            std::vector<T> scratch, dcol;
            for (std::size_t n = 0; n < g.batch; ++n) {
                const T* go = o.grad.data() + n * out_size;
                if (tk.requires_grad())
                    kernels::gemm_nt(g.filters, rows, cols, go, col->data() + n * rows * cols,
                                     tk.grad().data(), scratch);
                if (tb.requires_grad()) {
                    auto gb = tb.grad();
                    for (std::size_t f = 0; f < g.filters; ++f) {
                        T acc = T(0);
                        for (std::size_t i = 0; i < cols; ++i) acc += go[f * cols + i];
                        gb[f] += acc;
                    }
                }
                if (tx.requires_grad()) {
                    dcol.assign(rows * cols, T(0));
                    kernels::gemm_tn(rows, cols, g.filters, tk.data().data(), go, dcol.data());
                    col2im_add(g, dcol.data(), tx.grad().data() + n * in_size);
                }
            }
        });
}

template <typename T>
Tensor<T> upsample2d_forward(const Tensor<T>& x, std::size_t factor) {
    if (factor < 1) throw ContractError("upsample2d: factor must be at least 1");
    if (x.rank() != 4) throw DimensionError("upsample2d: expected [N,C,H,W], got " + shape_string(x.shape()));
    const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = h * factor, ow = w * factor;
    std::vector<T> out(planes * oh * ow);
    const T* xv = x.data().data();
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j)
                out[(p * oh + i) * ow + j] = xv[(p * h + i / factor) * w + j / factor];
    return Tensor<T>::make_result({x.dim(0), x.dim(1), oh, ow}, std::move(out), "upsample2d", {x},
                                  [x, planes, h, w, factor](const TensorData<T>& o) {
                                      Tensor<T> tx = x;
                                      auto g = tx.grad();
                                      const std::size_t oh = h * factor, ow = w * factor;
                                      for (std::size_t p = 0; p < planes; ++p)
                                          for (std::size_t i = 0; i < oh; ++i)
                                              for (std::size_t j = 0; j < ow; ++j)
                                                  g[(p * h + i / factor) * w + j / factor] +=
                                                      o.grad[(p * oh + i) * ow + j];
                                  });
}

template <typename T>
Tensor<T> maxpool2d_forward(const Tensor<T>& x, std::size_t window, std::size_t stride) {
    if (window < 1 || stride < 1) throw ContractError("maxpool2d: window and stride must be at least 1");
    if (x.rank() != 4) throw DimensionError("maxpool2d: expected [N,C,H,W], got " + shape_string(x.shape()));
    const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h < window || w < window) {
        throw DimensionError("maxpool2d: window " + std::to_string(window) + " larger than input " +
                             shape_string(x.shape()));
    }
    const std::size_t oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
    std::vector<T> out(planes * oh * ow);
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    const T* xv = x.data().data();
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j) {
                std::size_t best = (p * h + i * stride) * w + j * stride;
                T second = -std::numeric_limits<T>::infinity();
                for (std::size_t a = 0; a < window; ++a)
                    for (std::size_t b = 0; b < window; ++b) {
                        const std::size_t idx = (p * h + i * stride + a) * w + j * stride + b;
                        if (idx == best) continue;
                        if (xv[idx] > xv[best]) {
                            second = xv[best];
                            best = idx;
                        } else if (xv[idx] > second) {
                            second = xv[idx];
                        }
                    }
                if (window > 1) SmoothnessProbe::report(static_cast<double>(xv[best] - second));
                const std::size_t o = (p * oh + i) * ow + j;
                out[o] = xv[best];
                (*argmax)[o] = best;
            }
    return Tensor<T>::make_result({x.dim(0), x.dim(1), oh, ow}, std::move(out), "maxpool2d", {x},
                                  [x, argmax](const TensorData<T>& o) {
                                      Tensor<T> tx = x;
                                      auto g = tx.grad();
                                      for (std::size_t i = 0; i < o.grad.size(); ++i) g[(*argmax)[i]] += o.grad[i];
                                  });
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            BatchNormStats<T>& stats, Mode mode, double momentum, double epsilon) {
    if ((x.rank() != 2 && x.rank() != 4) || gamma.rank() != 1 || beta.shape() != gamma.shape() ||
        gamma.dim(0) != x.dim(1) || stats.running_mean.shape() != gamma.shape() ||
        stats.running_var.shape() != gamma.shape()) {
        throw DimensionError("batchnorm: input " + shape_string(x.shape()) + " and gamma " +
                             shape_string(gamma.shape()) + " do not agree");
    }
    const std::size_t batch = x.dim(0), channels = x.dim(1);
    const std::size_t inner = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
    const std::size_t count = batch * inner;
    const T eps = static_cast<T>(epsilon);
    const T* xv = x.data().data();
    const T* gv = gamma.data().data();
    const T* bv = beta.data().data();
    std::vector<T> out(x.numel());

    if (mode == Mode::eval) {
        // Frozen affine map: y = gamma * (x - mean) / sqrt(var + eps) + beta.
        auto centered = std::make_shared<std::vector<T>>(x.numel());
        auto inv_std = std::make_shared<std::vector<T>>(channels);
        const T* rm = stats.running_mean.data().data();
        const T* rv = stats.running_var.data().data();
        for (std::size_t c = 0; c < channels; ++c) (*inv_std)[c] = T(1) / std::sqrt(rv[c] + eps);
        for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t i = 0; i < inner; ++i) {
                    const std::size_t idx = (n * channels + c) * inner + i;
                    (*centered)[idx] = (xv[idx] - rm[c]) * (*inv_std)[c];
                    out[idx] = gv[c] * (*centered)[idx] + bv[c];
                }
        return Tensor<T>::make_result(
            x.shape(), std::move(out), "batchnorm_eval", {x, gamma, beta},
            [x, gamma, beta, centered, inv_std, batch, channels, inner](const TensorData<T>& o) {
                Tensor<T> tx = x, tg = gamma, tb = beta;
                for (std::size_t n = 0; n < batch; ++n)
                    for (std::size_t c = 0; c < channels; ++c)
                        for (std::size_t i = 0; i < inner; ++i) {
                            const std::size_t idx = (n * channels + c) * inner + i;
                            const T go = o.grad[idx];
                            if (tx.requires_grad()) tx.grad()[idx] += go * tg.data()[c] * (*inv_std)[c];
                            if (tg.requires_grad()) tg.grad()[c] += go * (*centered)[idx];
                            if (tb.requires_grad()) tb.grad()[c] += go;
                        }
            });
    }

    if (batch < 2) {
        throw ContractError("batchnorm: train mode needs a batch of at least 2, got " +
                            std::to_string(batch));
    }
    auto xhat = std::make_shared<std::vector<T>>(x.numel());
    auto inv_std = std::make_shared<std::vector<T>>(channels);
    T* rm = stats.running_mean.data().data();
    T* rv = stats.running_var.data().data();
    const T mom = static_cast<T>(momentum);
    for (std::size_t c = 0; c < channels; ++c) {
        T acc = T(0);
        for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t i = 0; i < inner; ++i) acc += xv[(n * channels + c) * inner + i];
        const T mu = acc / static_cast<T>(count);
        T var = T(0);
        for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t i = 0; i < inner; ++i) {
                const T d = xv[(n * channels + c) * inner + i] - mu;
                var += d * d;
            }
        const T unbiased = var / static_cast<T>(count - 1);
        var /= static_cast<T>(count);
        const T is = T(1) / std::sqrt(var + eps);
        (*inv_std)[c] = is;
        for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t idx = (n * channels + c) * inner + i;
                (*xhat)[idx] = (xv[idx] - mu) * is;
                out[idx] = gv[c] * (*xhat)[idx] + bv[c];
            }
        rm[c] = mom * rm[c] + (T(1) - mom) * mu;
        rv[c] = mom * rv[c] + (T(1) - mom) * unbiased;
    }
    return Tensor<T>::make_result(
        x.shape(), std::move(out), "batchnorm", {x, gamma, beta},
        [x, gamma, beta, xhat, inv_std, batch, channels, inner](const TensorData<T>& o) {
            Tensor<T> tx = x, tg = gamma, tb = beta;
            const T m = static_cast<T>(batch * inner);
            for (std::size_t c = 0; c < channels; ++c) {
                T sum_g = T(0), sum_gx = T(0);
                for (std::size_t n = 0; n < batch; ++n)
                    for (std::size_t i = 0; i < inner; ++i) {
                        const std::size_t idx = (n * channels + c) * inner + i;
                        sum_g += o.grad[idx];
                        sum_gx += o.grad[idx] * (*xhat)[idx];
                    }
                if (tg.requires_grad()) tg.grad()[c] += sum_gx;
                if (tb.requires_grad()) tb.grad()[c] += sum_g;
                if (tx.requires_grad()) {
                    auto gx = tx.grad();
                    const T scale = tg.data()[c] * (*inv_std)[c] / m;
                    for (std::size_t n = 0; n < batch; ++n)
                        for (std::size_t i = 0; i < inner; ++i) {
                            const std::size_t idx = (n * channels + c) * inner + i;
                            gx[idx] += scale * (m * o.grad[idx] - sum_g - (*xhat)[idx] * sum_gx);
                        }
                }
            }
        });
}

namespace {

template <typename T>
Tensor<T> glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor<T> t(std::move(shape));
    for (T& v : t.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    t.set_requires_grad(true);
    return t;
}

template <typename T>
Tensor<T> trainable(Shape shape, T fill) {
    Tensor<T> t = Tensor<T>::full(std::move(shape), fill);
    t.set_requires_grad(true);
    return t;
}

}  // namespace

template <typename T>
Layer<T>::Layer(LayerSpec spec, Shape input_shape, Rng& rng)
    : spec_(std::move(spec)), input_shape_(std::move(input_shape)) {
    output_shape_ = infer_output_shape(spec_, input_shape_);
    switch (spec_.kind) {
        case LayerKind::dense: {
            const std::size_t in = input_shape_[0], out = spec_.units;
            params_.emplace_back("weight", glorot<T>({in, out}, in, out, rng));
            params_.emplace_back("bias", trainable<T>({out}, T(0)));
            break;
        }
        case LayerKind::conv2d: {
            const std::size_t c = input_shape_[0], f = spec_.units, k = spec_.kernel;
            params_.emplace_back("kernel", glorot<T>({f, c, k, k}, c * k * k, f * k * k, rng));
            params_.emplace_back("bias", trainable<T>({f}, T(0)));
            break;
        }
        case LayerKind::batchnorm: {
            const std::size_t c = input_shape_[0];
            params_.emplace_back("gamma", trainable<T>({c}, T(1)));
            params_.emplace_back("beta", trainable<T>({c}, T(0)));
            buffers_.emplace_back("running_mean", Tensor<T>::zeros({c}));
            buffers_.emplace_back("running_var", Tensor<T>::full({c}, T(1)));
            break;
        }
        default:
            break;
    }
}

template <typename T>
Tensor<T> Layer<T>::forward(const Tensor<T>& x, Mode mode) {
    Shape expected = input_shape_;
    expected.insert(expected.begin(), x.rank() > 0 ? x.dim(0) : 0);
    if (x.shape() != expected) {
        throw DimensionError(std::string(layer_kind_name(spec_.kind)) + ": expected input " +
                             shape_string(expected) + ", got " + shape_string(x.shape()));
    }
    const std::size_t batch = x.dim(0);
    switch (spec_.kind) {
        case LayerKind::dense:
            return dense_forward(x, param(0), param(1));
        case LayerKind::conv2d:
            return conv2d_forward(x, param(0), param(1), spec_.stride, spec_.padding);
        case LayerKind::upsample2d:
            return upsample2d_forward(x, spec_.factor);
        case LayerKind::maxpool2d:
            return maxpool2d_forward(x, spec_.kernel, spec_.stride);
        case LayerKind::batchnorm: {
            BatchNormStats<T> stats{buffers_[0].second, buffers_[1].second};
            return batchnorm_forward(x, param(0), param(1), stats, mode, spec_.momentum, spec_.epsilon);
        }
        case LayerKind::leaky_relu:
            return leaky_relu(x, spec_.slope);
        case LayerKind::sigmoid:
            return sigmoid(x);
        case LayerKind::flatten:
        case LayerKind::reshape: {
            Shape target = output_shape_;
            target.insert(target.begin(), batch);
            return reshape(x, std::move(target));
        }
        case LayerKind::normalize:
            return normalize_rows(x);
    }
    throw ContractError("unhandled layer kind");
}

#define FAAE_INSTANTIATE_LAYER_OPS(T)                                                                 \
    template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
    template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                                      std::size_t, std::size_t);                                      \
    template Tensor<T> upsample2d_forward(const Tensor<T>&, std::size_t);                             \
    template Tensor<T> maxpool2d_forward(const Tensor<T>&, std::size_t, std::size_t);                 \
    template Tensor<T> batchnorm_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                         BatchNormStats<T>&, Mode, double, double);                   \
    template class Layer<T>;

FAAE_INSTANTIATE_LAYER_OPS(float)
FAAE_INSTANTIATE_LAYER_OPS(double)

#undef FAAE_INSTANTIATE_LAYER_OPS

}  // namespace faae
