#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "faae/layers.hpp"

namespace faae {

template <typename T>
struct NamedTensor {
    std::string name;
    Tensor<T> tensor;
};

// An ordered layer composition. Parameter names are "<index>.<kind>.<local>",
// e.g. "0.dense.weight", and are unique within a network.
template <typename T>
class Network {
public:
    Network(std::string name, Shape input_shape, const std::vector<LayerSpec>& specs, Rng& rng);

    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    // Deep copy with independent parameter storage.
    Network clone() const;
    // Same architecture and values at another precision.
    template <typename U>
    Network<U> cast() const;

    // x: [N, input_shape...] -> [N, output_shape...]
    Tensor<T> forward(const Tensor<T>& x, Mode mode);

    const std::string& name() const { return name_; }
    const Shape& input_shape() const { return input_shape_; }
    const Shape& output_shape() const;
    std::vector<Layer<T>>& layers() { return layers_; }
    const std::vector<Layer<T>>& layers() const { return layers_; }
    std::vector<LayerSpec> specs() const;

    std::vector<NamedTensor<T>> parameters() const;
    std::vector<NamedTensor<T>> buffers() const;
    std::size_t parameter_count() const;
    // Throws ContractError for unknown names.
    Tensor<T> parameter(std::string_view name) const;
    Tensor<T> buffer(std::string_view name) const;
    void zero_grad();

    // "input=<dims>" followed by one canonical LayerSpec line per layer.
    std::string architecture() const;
    static Network from_architecture(std::string name, std::string_view text, Rng& rng);

private:
    std::string name_;
    Shape input_shape_;
    std::vector<Layer<T>> layers_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace faae
