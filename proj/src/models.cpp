#include "faae/models.hpp"

#include "faae/error.hpp"

namespace faae {

void ModelSpec::validate() const {
    if (latent_dim == 0) throw ConfigError("model: latent dimension must be positive");
    if (widths.empty()) throw ConfigError("model: at least one width is required");
    for (std::size_t w : widths)
        if (w == 0) throw ConfigError("model: widths must be positive");
    for (std::size_t w : critic_hidden)
        if (w == 0) throw ConfigError("model: critic widths must be positive");
    if (data_shape.empty() || shape_numel(data_shape) == 0) throw ConfigError("model: empty data shape");
    if (arch == Arch::conv) {
        if (data_shape.size() != 3) {
            throw ConfigError("model: conv networks need [C,H,W] data, got " + shape_string(data_shape));
        }
        const std::size_t h = data_shape[1], w = data_shape[2];
        const std::size_t reduction = std::size_t(1) << widths.size();
        if (h != w || h % reduction != 0 || h / reduction == 0) {
            throw ConfigError("model: data shape " + shape_string(data_shape) + " is not reachable by " +
                              std::to_string(widths.size()) + " doublings from a square seed");
        }
    } else if (data_shape.size() != 1 && data_shape.size() != 3) {
        throw ConfigError("model: mlp networks need [d] or [C,H,W] data, got " + shape_string(data_shape));
    }
}

namespace {

std::size_t seed_size(const ModelSpec& spec) { return spec.data_shape[1] >> spec.widths.size(); }

void append_mlp_stack(std::vector<LayerSpec>& layers, const std::vector<std::size_t>& widths) {
    for (std::size_t w : widths) {
        layers.push_back(LayerSpec::Dense(w));
        layers.push_back(LayerSpec::LeakyRelu());
    }
}

std::vector<std::size_t> reversed(std::vector<std::size_t> v) {
    return {v.rbegin(), v.rend()};
}

void append_conv_down_stages(std::vector<LayerSpec>& layers, const std::vector<std::size_t>& widths) {
    for (std::size_t w : widths) {
        layers.push_back(LayerSpec::Conv2d(w, 3));
        layers.push_back(LayerSpec::BatchNorm());
        layers.push_back(LayerSpec::LeakyRelu());
        layers.push_back(LayerSpec::MaxPool2d(2, 2));
    }
}

}  // namespace

template <typename T>
Network<T> build_generator(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<LayerSpec> layers;
    if (spec.arch == Arch::conv) {
        const std::size_t s = seed_size(spec), top = spec.widths.back();
        layers.push_back(LayerSpec::Dense(top * s * s));
        layers.push_back(LayerSpec::Reshape({top, s, s}));
        layers.push_back(LayerSpec::BatchNorm());
        layers.push_back(LayerSpec::LeakyRelu());
        for (auto it = spec.widths.rbegin(); it != spec.widths.rend(); ++it) {
            layers.push_back(LayerSpec::Upsample2d(2));
            layers.push_back(LayerSpec::Conv2d(*it, 3));
            layers.push_back(LayerSpec::BatchNorm());
            layers.push_back(LayerSpec::LeakyRelu());
        }
        layers.push_back(LayerSpec::Conv2d(spec.data_shape[0], 3));
        layers.push_back(LayerSpec::Sigmoid());
    } else {
        append_mlp_stack(layers, spec.widths);
        layers.push_back(LayerSpec::Dense(spec.data_size()));
        if (spec.data_shape.size() == 3) {
            layers.push_back(LayerSpec::Sigmoid());
            layers.push_back(LayerSpec::Reshape(spec.data_shape));
        }
    }
    return Network<T>("G", {spec.latent_dim}, layers, rng);
}

template <typename T>
Network<T> build_encoder(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<LayerSpec> layers;
    if (spec.arch == Arch::conv) {
        append_conv_down_stages(layers, spec.widths);
        layers.push_back(LayerSpec::Flatten());
    } else {
        if (spec.data_shape.size() == 3) layers.push_back(LayerSpec::Flatten());
        append_mlp_stack(layers, reversed(spec.widths));
    }
    layers.push_back(LayerSpec::Dense(spec.latent_dim));
    if (spec.encoder_normalize) layers.push_back(LayerSpec::Normalize());
    return Network<T>("E", spec.data_shape, layers, rng);
}

template <typename T>
Network<T> build_discriminator(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<LayerSpec> layers;
    if (spec.arch == Arch::conv) {
        append_conv_down_stages(layers, spec.widths);
        layers.push_back(LayerSpec::Flatten());
    } else {
        if (spec.data_shape.size() == 3) layers.push_back(LayerSpec::Flatten());
        append_mlp_stack(layers, reversed(spec.widths));
    }
    layers.push_back(LayerSpec::Dense(1));
    layers.push_back(LayerSpec::Sigmoid());
    return Network<T>("D", spec.data_shape, layers, rng);
}

template <typename T>
Network<T> build_latent_discriminator(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<LayerSpec> layers;
    append_mlp_stack(layers, spec.arch == Arch::mlp ? reversed(spec.widths) : spec.critic_hidden);
    layers.push_back(LayerSpec::Dense(1));
    layers.push_back(LayerSpec::Sigmoid());
    return Network<T>("D", {spec.latent_dim}, layers, rng);
}

template <typename T>
Network<T> build_joint_discriminator(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<LayerSpec> layers;
    append_mlp_stack(layers, spec.arch == Arch::mlp ? reversed(spec.widths) : spec.critic_hidden);
    layers.push_back(LayerSpec::Dense(1));
    layers.push_back(LayerSpec::Sigmoid());
    return Network<T>("D", {spec.latent_dim + spec.data_size()}, layers, rng);
}

template <typename T>
bool mirror_check(const Network<T>& generator, const Network<T>& encoder) {
    return encoder.input_shape() == generator.output_shape() &&
           shape_numel(encoder.output_shape()) == shape_numel(generator.input_shape());
}

#define FAAE_INSTANTIATE_MODELS(T)                                              \
    template Network<T> build_generator<T>(const ModelSpec&, Rng&);             \
    template Network<T> build_encoder<T>(const ModelSpec&, Rng&);               \
    template Network<T> build_discriminator<T>(const ModelSpec&, Rng&);         \
    template Network<T> build_latent_discriminator<T>(const ModelSpec&, Rng&);  \
    template Network<T> build_joint_discriminator<T>(const ModelSpec&, Rng&);   \
    template bool mirror_check<T>(const Network<T>&, const Network<T>&);

FAAE_INSTANTIATE_MODELS(float)
FAAE_INSTANTIATE_MODELS(double)

#undef FAAE_INSTANTIATE_MODELS

}  // namespace faae
