#include "faae/objectives.hpp"

#include "faae/error.hpp"

namespace faae {

template <typename T>
Tensor<T> reencoding_loss(const Tensor<T>& z, const Tensor<T>& z_hat, LossNorm norm) {
    if (z.rank() != 2 || z.shape() != z_hat.shape()) {
        throw ContractError("reencoding_loss: latent batches " + shape_string(z.shape()) + " and " +
                            shape_string(z_hat.shape()) + " differ");
    }
    if (z.dim(0) == 0) throw ContractError("reencoding_loss: empty batch");
    const Tensor<T> diff = sub(z, z_hat);
    if (norm == LossNorm::l2sq) return mean(square(diff));
    return mean(row_norm(diff));
}

template <typename T>
Tensor<T> reconstruction_loss(const Tensor<T>& x, const Tensor<T>& x_hat) {
    if (x.shape() != x_hat.shape()) {
        throw ContractError("reconstruction_loss: shapes " + shape_string(x.shape()) + " and " +
                            shape_string(x_hat.shape()) + " differ");
    }
    if (x.numel() == 0) throw ContractError("reconstruction_loss: empty batch");
    return mean(square(sub(x, x_hat)));
}

template <typename T>
AdversarialTerms<T> gan_value(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
    if (d_real.numel() == 0 || d_fake.numel() == 0) throw ContractError("gan_value: empty batch");
    AdversarialTerms<T> out;
    out.adv_d = add(mean(log_clamped(d_real)), mean(log_clamped(subtract_from(1.0, d_fake))));
    out.adv_g = negate(mean(log_clamped(d_fake)));
    return out;
}

namespace {

template <typename T>
ObjectiveTerms<T> assemble(AdversarialTerms<T> adv, Tensor<T> distance, const LossWeights& w) {
    ObjectiveTerms<T> out;
    out.adv_d = adv.adv_d;
    out.adv_g = adv.adv_g;
    out.distance = distance;
    out.generator_total = add(scale(adv.adv_g, w.weight_adv), scale(distance, w.alpha));
    out.report.adv_d = static_cast<double>(out.adv_d.item());
    out.report.adv_g = static_cast<double>(out.adv_g.item());
    out.report.recon_or_reenc = static_cast<double>(out.distance.item());
    out.report.total_weighted = static_cast<double>(out.generator_total.item());
    out.report.alpha = w.alpha;
    return out;
}

template <typename T>
Tensor<T> flatten_rows(const Tensor<T>& t) {
    if (t.rank() == 2) return t;
    return reshape(t, {t.dim(0), t.numel() / std::max<std::size_t>(t.dim(0), 1)});
}

}  // namespace

template <typename T>
ObjectiveTerms<T> faae_value(Network<T>& G, Network<T>& E, Network<T>& D, const Tensor<T>& x,
                             const Tensor<T>& z, const LossWeights& weights, Mode mode) {
    const Tensor<T> x_hat = G.forward(z, mode);
    const Tensor<T> z_hat = flatten_rows(E.forward(x_hat, mode));
    const Tensor<T> d_real = D.forward(x, mode);
    const Tensor<T> d_fake = D.forward(x_hat, mode);
    return assemble(gan_value(d_real, d_fake), reencoding_loss(z, z_hat, weights.norm), weights);
}

template <typename T>
ObjectiveTerms<T> gan_objective(Network<T>& G, Network<T>& D, const Tensor<T>& x, const Tensor<T>& z,
                                const LossWeights& weights, Mode mode) {
    const Tensor<T> x_hat = G.forward(z, mode);
    const Tensor<T> d_real = D.forward(x, mode);
    const Tensor<T> d_fake = D.forward(x_hat, mode);
    return assemble(gan_value(d_real, d_fake), Tensor<T>::scalar(T(0)), weights);
}

template <typename T>
ObjectiveTerms<T> aae_value(Network<T>& G, Network<T>& E, Network<T>& D_latent, const Tensor<T>& x,
                            const Tensor<T>& z, const LossWeights& weights, Mode mode) {
    const Tensor<T> z_hat = flatten_rows(E.forward(x, mode));
    const Tensor<T> x_hat = G.forward(z_hat, mode);
    const Tensor<T> d_prior = D_latent.forward(z, mode);
    const Tensor<T> d_code = D_latent.forward(z_hat, mode);
    return assemble(gan_value(d_prior, d_code), reconstruction_loss(x, x_hat), weights);
}

template <typename T>
Tensor<T> joint_input(const Tensor<T>& latent, const Tensor<T>& data) {
    return concat_columns(flatten_rows(latent), flatten_rows(data));
}

template <typename T>
ObjectiveTerms<T> bigan_value(Network<T>& G, Network<T>& E, Network<T>& D_joint, const Tensor<T>& x,
                              const Tensor<T>& z, const LossWeights& weights, Mode mode) {
    const Tensor<T> z_hat = flatten_rows(E.forward(x, mode));
    const Tensor<T> x_hat = G.forward(z, mode);
    const Tensor<T> d_encoded = D_joint.forward(joint_input(z_hat, x), mode);
    const Tensor<T> d_generated = D_joint.forward(joint_input(z, x_hat), mode);
    AdversarialTerms<T> adv;
    adv.adv_d = add(mean(log_clamped(d_encoded)), mean(log_clamped(subtract_from(1.0, d_generated))));
    adv.adv_g = negate(add(mean(log_clamped(subtract_from(1.0, d_encoded))), mean(log_clamped(d_generated))));
    Tensor<T> diagnostic;
    {
        NoGradGuard guard;
        const Tensor<T> reencoded = flatten_rows(E.forward(x_hat.detach(), Mode::eval));
        diagnostic = reencoding_loss(z, reencoded, weights.norm);
    }
    return assemble(adv, diagnostic, weights);
}

#define FAAE_INSTANTIATE_OBJECTIVES(T)                                                                    \
    template Tensor<T> reencoding_loss(const Tensor<T>&, const Tensor<T>&, LossNorm);                     \
    template Tensor<T> reconstruction_loss(const Tensor<T>&, const Tensor<T>&);                           \
    template AdversarialTerms<T> gan_value(const Tensor<T>&, const Tensor<T>&);                           \
    template ObjectiveTerms<T> faae_value(Network<T>&, Network<T>&, Network<T>&, const Tensor<T>&,        \
                                          const Tensor<T>&, const LossWeights&, Mode);                    \
    template ObjectiveTerms<T> gan_objective(Network<T>&, Network<T>&, const Tensor<T>&, const Tensor<T>&, \
                                             const LossWeights&, Mode);                                   \
    template ObjectiveTerms<T> aae_value(Network<T>&, Network<T>&, Network<T>&, const Tensor<T>&,         \
                                         const Tensor<T>&, const LossWeights&, Mode);                     \
    template Tensor<T> joint_input(const Tensor<T>&, const Tensor<T>&);                                   \
    template ObjectiveTerms<T> bigan_value(Network<T>&, Network<T>&, Network<T>&, const Tensor<T>&,       \
                                           const Tensor<T>&, const LossWeights&, Mode);

FAAE_INSTANTIATE_OBJECTIVES(float)
FAAE_INSTANTIATE_OBJECTIVES(double)

#undef FAAE_INSTANTIATE_OBJECTIVES

}  // namespace faae
