#include "faae/network.hpp"

#include <algorithm>
#include <sstream>

#include "faae/error.hpp"
#include "text.hpp"

namespace faae {

template <typename T>
Network<T>::Network(std::string name, Shape input_shape, const std::vector<LayerSpec>& specs, Rng& rng)
    : name_(std::move(name)), input_shape_(std::move(input_shape)) {
    Shape shape = input_shape_;
    layers_.reserve(specs.size());
    for (const auto& spec : specs) {
        layers_.emplace_back(spec, shape, rng);
        shape = layers_.back().output_shape();
    }
}

template <typename T>
Network<T> Network<T>::clone() const {
    return cast<T>();
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
    Rng unused(0);
    Network<U> copy(name_, input_shape_, specs(), unused);
    auto copy_values = [](const std::vector<NamedTensor<T>>& from, const std::vector<NamedTensor<U>>& to) {
        for (std::size_t i = 0; i < from.size(); ++i) {
            Tensor<U> dst = to[i].tensor;
            auto src = from[i].tensor.data();
            std::transform(src.begin(), src.end(), dst.data().begin(), [](T v) { return static_cast<U>(v); });
        }
    };
    copy_values(parameters(), copy.parameters());
    copy_values(buffers(), copy.buffers());
    return copy;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> h = x;
    for (auto& layer : layers_) h = layer.forward(h, mode);
    if (layers_.empty()) {
        Shape expected = input_shape_;
        expected.insert(expected.begin(), x.rank() ? x.dim(0) : 0);
        if (x.shape() != expected) {
            throw DimensionError(name_ + ": expected input " + shape_string(expected) + ", got " +
                                 shape_string(x.shape()));
        }
    }
    return h;
}

template <typename T>
const Shape& Network<T>::output_shape() const {
    return layers_.empty() ? input_shape_ : layers_.back().output_shape();
}

template <typename T>
std::vector<LayerSpec> Network<T>::specs() const {
    std::vector<LayerSpec> out;
    for (const auto& layer : layers_) out.push_back(layer.spec());
    return out;
}

namespace {

template <typename T, typename Get>
std::vector<NamedTensor<T>> collect(const std::vector<Layer<T>>& layers, Get get) {
    std::vector<NamedTensor<T>> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string prefix = std::to_string(i) + "." + std::string(layer_kind_name(layers[i].spec().kind)) + ".";
        for (const auto& [local, tensor] : get(layers[i])) out.push_back({prefix + local, tensor});
    }
    return out;
}

}  // namespace

template <typename T>
std::vector<NamedTensor<T>> Network<T>::parameters() const {
    return collect(layers_, [](const Layer<T>& l) -> const auto& { return l.params(); });
}

template <typename T>
std::vector<NamedTensor<T>> Network<T>::buffers() const {
    return collect(layers_, [](const Layer<T>& l) -> const auto& { return l.buffers(); });
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.tensor.numel();
    return n;
}

template <typename T>
Tensor<T> Network<T>::parameter(std::string_view name) const {
    for (auto& p : parameters())
        if (p.name == name) return p.tensor;
    throw ContractError(name_ + ": no parameter named '" + std::string(name) + "'");
}

template <typename T>
Tensor<T> Network<T>::buffer(std::string_view name) const {
    for (auto& b : buffers())
        if (b.name == name) return b.tensor;
    throw ContractError(name_ + ": no buffer named '" + std::string(name) + "'");
}

template <typename T>
void Network<T>::zero_grad() {
    for (auto& p : parameters()) p.tensor.zero_grad();
}

template <typename T>
std::string Network<T>::architecture() const {
    std::ostringstream out;
    out << "input=" << text::format_dims(input_shape_) << "\n";
    for (const auto& layer : layers_) out << to_string(layer.spec()) << "\n";
    return out.str();
}

template <typename T>
Network<T> Network<T>::from_architecture(std::string name, std::string_view arch, Rng& rng) {
    std::vector<std::string_view> lines;
    for (auto line : text::split(arch, '\n'))
        if (!line.empty()) lines.push_back(line);
    if (lines.empty() || lines[0].substr(0, 6) != "input=") {
        throw IoError(name + ": architecture text lacks an input line");
    }
    const Shape input = text::parse_dims(lines[0].substr(6));
    std::vector<LayerSpec> specs;
    for (std::size_t i = 1; i < lines.size(); ++i) specs.push_back(parse_layer_spec(lines[i]));
    return Network(std::move(name), input, specs, rng);
}

template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;

}  // namespace faae
