#include "faae/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>
#include <memory>

#include "faae/error.hpp"
#include "faae/data.hpp"
#include "faae/gradcheck.hpp"
#include "faae/models.hpp"
#include "faae/objectives.hpp"
#include "faae/ops.hpp"

namespace faae {

namespace {

using D = double;
using TensorD = Tensor<D>;

struct Instance {
    std::vector<TensorD> leaves;
    std::function<TensorD()> f;
};

TensorD random_leaf(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    TensorD t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    t.set_requires_grad(true);
    return t;
}

TensorD random_const(Shape shape, Rng& rng) {
    TensorD t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
    return t;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); }

// Scalar probe sum(w * y) with a fixed random w, so every output coordinate
// receives a distinct upstream gradient.
Instance weighted(std::vector<TensorD> leaves, std::function<TensorD()> y, Rng& rng) {
    const TensorD probe_shape = [&] {
        NoGradGuard guard;
        return y();
    }();
    const TensorD w = random_const(probe_shape.shape(), rng);
    return {std::move(leaves), [y, w] { return sum(mul(y(), w)); }};
}

Instance make_matmul(Rng& rng) {
    auto a = random_leaf({pick(rng, 1, 5), pick(rng, 1, 5)}, rng);
    auto b = random_leaf({a.dim(1), pick(rng, 1, 5)}, rng);
    return weighted({a, b}, [a, b] { return matmul(a, b); }, rng);
}

Instance make_dense(Rng& rng) {
    const std::size_t in = pick(rng, 1, 6), out = pick(rng, 1, 6);
    auto x = random_leaf({pick(rng, 1, 4), in}, rng);
    auto w = random_leaf({in, out}, rng);
    auto b = random_leaf({out}, rng);
    return weighted({x, w, b}, [x, w, b] { return dense_forward(x, w, b); }, rng);
}

Instance make_conv2d(Rng& rng) {
    const std::size_t c = pick(rng, 1, 3), f = pick(rng, 1, 3);
    const std::size_t k = rng.below(2) ? 3 : 1;
    const std::size_t stride = pick(rng, 1, 2), padding = pick(rng, 0, k / 2);
    auto x = random_leaf({pick(rng, 1, 2), c, pick(rng, 3, 6), pick(rng, 3, 6)}, rng);
    auto kernel = random_leaf({f, c, k, k}, rng);
    auto bias = random_leaf({f}, rng);
    return weighted({x, kernel, bias}, [=] { return conv2d_forward(x, kernel, bias, stride, padding); }, rng);
}

Instance make_upsample(Rng& rng) {
    const std::size_t factor = pick(rng, 2, 3);
    auto x = random_leaf({pick(rng, 1, 2), pick(rng, 1, 2), pick(rng, 1, 4), pick(rng, 1, 4)}, rng);
    return weighted({x}, [x, factor] { return upsample2d_forward(x, factor); }, rng);
}

Instance make_maxpool(Rng& rng) {
    const std::size_t window = 2, stride = pick(rng, 1, 2);
    auto x = random_leaf({pick(rng, 1, 2), pick(rng, 1, 2), pick(rng, 2, 5), pick(rng, 2, 5)}, rng);
    return weighted({x}, [=] { return maxpool2d_forward(x, window, stride); }, rng);
}

Instance make_batchnorm(Rng& rng) {
    const std::size_t c = pick(rng, 1, 3);
    const bool spatial = rng.below(2) == 1;
    Shape shape = spatial ? Shape{pick(rng, 2, 3), c, pick(rng, 1, 3), pick(rng, 1, 3)} : Shape{pick(rng, 2, 6), c};
    auto x = random_leaf(shape, rng);
    auto gamma = random_leaf({c}, rng, 0.5, 1.5);
    auto beta = random_leaf({c}, rng);
    return weighted({x, gamma, beta},
                    [=] {
                        BatchNormStats<D> stats{TensorD::zeros({c}), TensorD::full({c}, 1.0)};
                        return batchnorm_forward(x, gamma, beta, stats, Mode::train, 0.99, 1e-5);
                    },
                    rng);
}

Instance make_leaky_relu(Rng& rng) {
    auto x = random_leaf({pick(rng, 1, 4), pick(rng, 1, 6)}, rng);
    return weighted({x}, [x] { return leaky_relu(x, 0.2); }, rng);
}

Instance make_sigmoid(Rng& rng) {
    auto x = random_leaf({pick(rng, 1, 4), pick(rng, 1, 6)}, rng, -4.0, 4.0);
    return weighted({x}, [x] { return sigmoid(x); }, rng);
}

Instance make_normalize(Rng& rng) {
    auto x = random_leaf({pick(rng, 1, 4), pick(rng, 1, 5)}, rng);
    return weighted({x}, [x] { return normalize_rows(x); }, rng);
}

Instance make_reencoding(Rng& rng) {
    const Shape s{pick(rng, 1, 5), pick(rng, 1, 6)};
    auto z = random_leaf(s, rng), z_hat = random_leaf(s, rng);
    const LossNorm norm = rng.below(2) ? LossNorm::l2 : LossNorm::l2sq;
    return {{z, z_hat}, [=] { return reencoding_loss(z, z_hat, norm); }};
}

Instance make_reconstruction(Rng& rng) {
    const Shape s{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3)};
    auto x = random_leaf(s, rng, 0.0, 1.0), x_hat = random_leaf(s, rng, 0.0, 1.0);
    return {{x, x_hat}, [=] { return reconstruction_loss(x, x_hat); }};
}

Instance make_gan_value(Rng& rng) {
    const std::size_t n = pick(rng, 1, 8);
    auto real = random_leaf({n, 1}, rng, 0.05, 0.95), fake = random_leaf({n, 1}, rng, 0.05, 0.95);
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    return {{real, fake}, [=] {
                const auto adv = gan_value(real, fake);
                return add(scale(adv.adv_d, a), scale(adv.adv_g, b));
            }};
}

struct TinyNets {
    std::shared_ptr<Network<D>> G, E, D_net;
    TensorD x, z;
};

// Small mlp or conv triple with inputs; `critic` builds the discriminator.
TinyNets tiny_nets(Rng& rng, bool conv, const std::function<Network<D>(const ModelSpec&, Rng&)>& critic) {
    ModelSpec spec;
    const std::size_t batch = pick(rng, 2, 3);
    if (conv) {
        spec.arch = Arch::conv;
        spec.data_shape = {1, 4, 4};
        spec.widths = {2};
        spec.latent_dim = 2;
        spec.critic_hidden = {3};
    } else {
        spec.arch = Arch::mlp;
        spec.data_shape = {2};
        spec.widths = {pick(rng, 2, 4)};
        spec.latent_dim = pick(rng, 2, 3);
        spec.critic_hidden = {3};
    }
    TinyNets t;
    t.G = std::make_shared<Network<D>>(build_generator<D>(spec, rng));
    t.E = std::make_shared<Network<D>>(build_encoder<D>(spec, rng));
    t.D_net = std::make_shared<Network<D>>(critic(spec, rng));
    // Parameters redrawn on [-1, 1].
    for (auto* net : {t.G.get(), t.E.get(), t.D_net.get()})
        for (auto& p : net->parameters())
            for (auto& v : p.tensor.data()) v = rng.uniform(-1.0, 1.0);
    Shape xs = spec.data_shape;
    xs.insert(xs.begin(), batch);
    t.x = TensorD(xs);
    for (auto& v : t.x.data()) v = rng.uniform(0.0, 1.0);
    t.z = sample_unit_sphere_batch<D>(batch, spec.latent_dim, rng);
    return t;
}

std::vector<TensorD> all_params(const TinyNets& t) {
    std::vector<TensorD> out;
    for (auto* net : {t.G.get(), t.E.get(), t.D_net.get()})
        for (auto& p : net->parameters()) out.push_back(p.tensor);
    return out;
}

template <typename Objective>
Instance make_composite(Rng& rng, const std::function<Network<D>(const ModelSpec&, Rng&)>& critic, Objective obj,
                        bool trained_distance = true) {
    TinyNets t = tiny_nets(rng, rng.below(2) == 1, critic);
    LossWeights w;
    w.alpha = rng.uniform(0.5, 2.0);
    w.weight_adv = rng.uniform(0.1, 1.0);
    const double c = rng.uniform(-1, 1);
    return {all_params(t), [t, w, c, obj, trained_distance] {
                const ObjectiveTerms<D> terms = obj(*t.G, *t.E, *t.D_net, t.x, t.z, w);
                const TensorD total = trained_distance ? terms.generator_total : scale(terms.adv_g, w.weight_adv);
                return add(total, scale(terms.adv_d, c));
            }};
}

Instance make_faae(Rng& rng) {
    return make_composite(rng, build_discriminator<D>,
                          [](Network<D>& G, Network<D>& E, Network<D>& Dn, const TensorD& x, const TensorD& z,
                             const LossWeights& w) { return faae_value(G, E, Dn, x, z, w); });
}

Instance make_aae(Rng& rng) {
    return make_composite(rng, build_latent_discriminator<D>,
                          [](Network<D>& G, Network<D>& E, Network<D>& Dn, const TensorD& x, const TensorD& z,
                             const LossWeights& w) { return aae_value(G, E, Dn, x, z, w); });
}

Instance make_bigan(Rng& rng) {
    return make_composite(rng, build_joint_discriminator<D>,
                          [](Network<D>& G, Network<D>& E, Network<D>& Dn, const TensorD& x, const TensorD& z,
                             const LossWeights& w) { return bigan_value(G, E, Dn, x, z, w); },
                          false);
}

using Maker = Instance (*)(Rng&);

const std::vector<std::pair<std::string, Maker>>& makers() {
    static const std::vector<std::pair<std::string, Maker>> table = {
        {"matmul", make_matmul},
        {"conv2d", make_conv2d},
        {"upsample2d", make_upsample},
        {"maxpool2d", make_maxpool},
        {"batchnorm", make_batchnorm},
        {"leaky_relu", make_leaky_relu},
        {"sigmoid", make_sigmoid},
        {"dense", make_dense},
        {"normalize", make_normalize},
        {"reencoding_loss", make_reencoding},
        {"reconstruction_loss", make_reconstruction},
        {"gan_value", make_gan_value},
        {"faae_value", make_faae},
        {"aae_value", make_aae},
        {"bigan_value", make_bigan},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& gradcheck_ops() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, maker] : makers()) out.push_back(name);
        return out;
    }();
    return names;
}

OpCheck check_op(std::string_view op, std::size_t instances, std::uint64_t seed, double eps) {
    Maker maker = nullptr;
    for (const auto& [name, m] : makers())
        if (name == op) maker = m;
    if (!maker) throw ContractError("gradcheck: unknown op '" + std::string(op) + "'");

    OpCheck result;
    result.op = std::string(op);
    Rng rng(seed);
    const std::size_t max_draws = 50 * std::max<std::size_t>(instances, 1);
    std::size_t draws = 0;
    while (result.instances < instances) {
        if (++draws > max_draws) {
            throw NumericalError("gradcheck " + result.op + ": too many draws near non-differentiable points");
        }
        Instance inst = maker(rng);
        {
            SmoothnessProbe probe;
            NoGradGuard guard;
            (void)inst.f();
            if (probe.min_margin() < kKinkMargin) {
                ++result.rejected;
                continue;
            }
        }
        const GradCheckResult r = grad_check(inst.f, inst.leaves, eps);
        result.max_error = std::max(result.max_error, r.max_relative_error);
        ++result.instances;
    }
    return result;
}

std::vector<OpCheck> run_gradcheck_suite(const std::vector<std::string>& ops, std::size_t instances,
                                         std::uint64_t seed, double eps) {
    std::vector<OpCheck> out;
    for (std::size_t i = 0; i < ops.size(); ++i) out.push_back(check_op(ops[i], instances, seed + i, eps));
    return out;
}

}  // namespace faae
