#pragma once

// Neural network building blocks. Spatial tensors use NCHW layout; shapes held
// by LayerSpec/Layer are per-sample (no batch axis).

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "faae/rng.hpp"
#include "faae/tensor.hpp"

namespace faae {

enum class Mode { train, eval };

enum class LayerKind {
    dense,
    conv2d,
    upsample2d,
    maxpool2d,
    batchnorm,
    leaky_relu,
    sigmoid,
    flatten,
    reshape,
    normalize,  // projection of each row onto the unit sphere
};

std::string_view layer_kind_name(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    std::size_t units = 0;    // dense output width, conv2d filter count
    std::size_t kernel = 1;   // conv2d kernel size, maxpool2d window
    std::size_t stride = 1;   // conv2d, maxpool2d
    std::size_t padding = 0;  // conv2d zero padding
    std::size_t factor = 1;   // upsample2d
    double slope = 0.2;       // leaky_relu
    double momentum = 0.99;   // batchnorm running statistics
    double epsilon = 1e-5;    // batchnorm
    Shape target;             // reshape

    static LayerSpec Dense(std::size_t units);
    // "Same" zero padding for odd kernels when padding is omitted.
    static LayerSpec Conv2d(std::size_t filters, std::size_t kernel, std::size_t stride = 1,
                            std::optional<std::size_t> padding = std::nullopt);
    static LayerSpec Upsample2d(std::size_t factor);
    static LayerSpec MaxPool2d(std::size_t window, std::size_t stride);
    static LayerSpec BatchNorm(double momentum = 0.99, double epsilon = 1e-5);
    static LayerSpec LeakyRelu(double slope = 0.2);
    static LayerSpec Sigmoid();
    static LayerSpec Flatten();
    static LayerSpec Reshape(Shape target);
    static LayerSpec Normalize();

    // Throws ContractError for out-of-range parameters.
    void validate() const;

    bool operator==(const LayerSpec&) const = default;
};

// One-line canonical text, e.g. "conv2d filters=16 kernel=3 stride=1 padding=1".
std::string to_string(const LayerSpec& spec);
LayerSpec parse_layer_spec(std::string_view line);

// Per-sample output shape; throws DimensionError when the input does not fit.
Shape infer_output_shape(const LayerSpec& spec, const Shape& input);

// Dense layer: x[N, in] . W[in, out] + b[out].
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Cross-correlation with zero padding: x[N, C, H, W], kernel[F, C, k, k], bias[F].
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias,
                         std::size_t stride, std::size_t padding);

// Nearest-neighbour enlargement; every pixel becomes a factor x factor block.
template <typename T>
Tensor<T> upsample2d_forward(const Tensor<T>& x, std::size_t factor);

// Per-window maximum; the gradient goes to the first maximal element.
template <typename T>
Tensor<T> maxpool2d_forward(const Tensor<T>& x, std::size_t window, std::size_t stride);

template <typename T>
struct BatchNormStats {
    Tensor<T> running_mean;
    Tensor<T> running_var;
};

// Per-channel normalization of x[N, C] or x[N, C, H, W]. Train mode uses the
// batch statistics and folds them into `stats` with the given momentum; eval
// mode applies the frozen running statistics.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            BatchNormStats<T>& stats, Mode mode, double momentum, double epsilon);

// An instantiated LayerSpec with its parameters.
template <typename T>
class Layer {
public:
    // Parameters are Glorot-uniform initialised from `rng`; biases and beta
    // start at zero, gamma at one.
    Layer(LayerSpec spec, Shape input_shape, Rng& rng);

    Tensor<T> forward(const Tensor<T>& x, Mode mode);

    const LayerSpec& spec() const { return spec_; }
    const Shape& input_shape() const { return input_shape_; }
    const Shape& output_shape() const { return output_shape_; }

    // Trainable tensors and non-trainable state, keyed by local name.
    std::vector<std::pair<std::string, Tensor<T>>>& params() { return params_; }
    const std::vector<std::pair<std::string, Tensor<T>>>& params() const { return params_; }
    std::vector<std::pair<std::string, Tensor<T>>>& buffers() { return buffers_; }
    const std::vector<std::pair<std::string, Tensor<T>>>& buffers() const { return buffers_; }

private:
    Tensor<T>& param(std::size_t i) { return params_[i].second; }

    LayerSpec spec_;
    Shape input_shape_;
    Shape output_shape_;
    std::vector<std::pair<std::string, Tensor<T>>> params_;
    std::vector<std::pair<std::string, Tensor<T>>> buffers_;
};

extern template class Layer<float>;
extern template class Layer<double>;

}  // namespace faae
