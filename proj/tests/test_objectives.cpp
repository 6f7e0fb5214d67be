#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "faae/data.hpp"
#include "faae/error.hpp"
#include "faae/gradcheck.hpp"
#include "faae/models.hpp"
#include "faae/objectives.hpp"

using namespace faae;

namespace {

const double kLn2 = std::numbers::ln2;

void set_values(Tensor<double> t, const std::vector<double>& v) {
    ASSERT_EQ(t.numel(), v.size());
    std::copy(v.begin(), v.end(), t.data().begin());
}

// Dense layer fixed to the identity, optionally followed by a unit projection.
Network<double> identity_net(const std::string& name, std::size_t n, bool project) {
    Rng rng(0);
    std::vector<LayerSpec> specs{LayerSpec::Dense(n)};
    if (project) specs.push_back(LayerSpec::Normalize());
    Network<double> net(name, {n}, specs, rng);
    std::vector<double> eye(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
    set_values(net.parameter("0.dense.weight"), eye);
    return net;
}

// sigmoid(0 . x + 0) == 0.5 for every input.
Network<double> half_critic(std::size_t in) {
    Rng rng(0);
    Network<double> net("D", {in}, {LayerSpec::Dense(1), LayerSpec::Sigmoid()}, rng);
    set_values(net.parameter("0.dense.weight"), std::vector<double>(in, 0.0));
    return net;
}

Tensor<double> batch_of(const std::vector<double>& v, std::size_t cols) {
    return Tensor<double>({v.size() / cols, cols}, v);
}

}  // namespace

TEST(Reencoding, Examples) {
    const Tensor<double> z = batch_of({1, 0, 0.6, 0.8}, 2);
    EXPECT_EQ(reencoding_loss(z, z).item(), 0.0);
    EXPECT_EQ(reencoding_loss(batch_of({1, 0}, 2), batch_of({0, 1}, 2)).item(), 1.0);
    EXPECT_DOUBLE_EQ(reencoding_loss(batch_of({1, 0}, 2), batch_of({0, 1}, 2), LossNorm::l2).item(), std::sqrt(2.0));
    EXPECT_THROW(reencoding_loss(z, batch_of({1, 0, 0}, 3)), ContractError);
}

TEST(Reencoding, GradientFormula) {
    Rng rng(1);
    const Tensor<double> z = sample_unit_sphere_batch<double>(3, 4, rng);
    Tensor<double> z_hat = sample_unit_sphere_batch<double>(3, 4, rng);
    z_hat.set_requires_grad();
    backward(reencoding_loss(z, z_hat));
    for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(z_hat.grad()[i], 2.0 * (z_hat.at(i) - z.at(i)) / (4.0 * 3.0), 1e-15);
    EXPECT_LT(grad_check([&](const Tensor<double>& t) { return reencoding_loss(z, t); }, z_hat.detach()), 1e-8);
}

TEST(Reconstruction, Examples) {
    const Tensor<double> zeros = Tensor<double>::zeros({2, 3, 2, 2});
    const Tensor<double> ones = Tensor<double>::full({2, 3, 2, 2}, 1.0);
    EXPECT_EQ(reconstruction_loss(ones, ones).item(), 0.0);
    EXPECT_EQ(reconstruction_loss(zeros, ones).item(), 1.0);
    Rng rng(2);
    Tensor<double> a({4, 3}), b({4, 3});
    for (double& v : a.data()) v = rng.uniform();
    for (double& v : b.data()) v = rng.uniform();
    EXPECT_EQ(reconstruction_loss(a, b).item(), reconstruction_loss(b, a).item());
    EXPECT_GT(reconstruction_loss(a, b).item(), 0.0);
    EXPECT_THROW(reconstruction_loss(a, Tensor<double>::zeros({4, 2})), ContractError);
}

TEST(GanValue, ConstantHalf) {
    const Tensor<double> half = Tensor<double>::full({5, 1}, 0.5);
    const auto t = gan_value(half, half);
    EXPECT_NEAR(t.adv_d.item(), -2.0 * kLn2, 1e-9);
    EXPECT_NEAR(t.adv_g.item(), kLn2, 1e-9);
}

TEST(GanValue, PerfectDiscriminatorUnderClamping) {
    const auto t = gan_value(Tensor<double>::full({3, 1}, 1.0), Tensor<double>::full({3, 1}, kLogFloor));
    EXPECT_NEAR(t.adv_d.item(), std::log(1.0 - kLogFloor), 1e-15);
    EXPECT_NEAR(t.adv_d.item(), 0.0, 1e-6);
    const auto zero = gan_value(Tensor<double>::full({3, 1}, 1.0), Tensor<double>::zeros({3, 1}));
    EXPECT_NEAR(zero.adv_g.item(), -std::log(kLogFloor), 1e-9);
    EXPECT_TRUE(std::isfinite(zero.adv_d.item()));
    EXPECT_THROW(gan_value(Tensor<double>({0, 1}, {}), Tensor<double>::zeros({3, 1})), ContractError);
}

TEST(FaaeValue, AlphaZeroIsPureAdversarial) {
    Rng rng(3);
    ModelSpec s;
    s.widths = {8};
    Network<double> G = build_generator<double>(s, rng), E = build_encoder<double>(s, rng),
                    D = build_discriminator<double>(s, rng);
    const Dataset ds = make_gauss8(16, 2.0, 0.05, rng);
    const Tensor<double> x = ds.range<double>(0, 16), z = sample_unit_sphere_batch<double>(16, 2, rng);
    LossWeights w;
    w.alpha = 0.0;
    const auto f = faae_value(G, E, D, x, z, w);
    const auto g = gan_objective(G, D, x, z, w);
    EXPECT_EQ(f.generator_total.item(), w.weight_adv * f.adv_g.item());
    EXPECT_EQ(f.adv_d.item(), g.adv_d.item());
    EXPECT_EQ(f.adv_g.item(), g.adv_g.item());
    EXPECT_EQ(g.distance.item(), 0.0);
}

TEST(FaaeValue, InversePairHasZeroReencoding) {
    Network<double> G = identity_net("G", 2, false), E = identity_net("E", 2, true), D = half_critic(2);
    Rng rng(4);
    const Tensor<double> z = sample_unit_sphere_batch<double>(8, 2, rng);
    const auto t = faae_value(G, E, D, z, z, LossWeights{});
    EXPECT_NEAR(t.distance.item(), 0.0, 1e-30);
    EXPECT_NEAR(t.adv_d.item(), -2.0 * kLn2, 1e-12);
    EXPECT_EQ(t.report.alpha, 100.0);
    EXPECT_DOUBLE_EQ(t.generator_total.item(), 0.1 * kLn2);
}

TEST(FaaeValue, CriticNotOnDistancePath) {
    Rng rng(5);
    ModelSpec s;
    s.widths = {8};
    Network<double> G = build_generator<double>(s, rng), E = build_encoder<double>(s, rng),
                    D = build_discriminator<double>(s, rng);
    const Tensor<double> x = make_gauss8(8, 2.0, 0.05, rng).range<double>(0, 8);
    const Tensor<double> z = sample_unit_sphere_batch<double>(8, 2, rng);
    const auto t = faae_value(G, E, D, x, z, LossWeights{});
    backward(t.distance);
    for (const auto& p : D.parameters()) EXPECT_FALSE(p.tensor.has_grad()) << p.name;
    for (const auto& p : G.parameters()) EXPECT_TRUE(p.tensor.has_grad()) << p.name;
}

TEST(AaeValue, ConstantHalfAndPerfectAutoencoder) {
    Network<double> G = identity_net("G", 2, false), E = identity_net("E", 2, true), D = half_critic(2);
    Rng rng(6);
    const Tensor<double> x = sample_unit_sphere_batch<double>(8, 2, rng);
    const Tensor<double> z = sample_unit_sphere_batch<double>(8, 2, rng);
    const auto t = aae_value(G, E, D, x, z, LossWeights{});
    EXPECT_NEAR(t.adv_d.item(), -2.0 * kLn2, 1e-12);
    EXPECT_NEAR(t.distance.item(), 0.0, 1e-30);
}

TEST(BiganValue, ConstantHalfAndDetachedDiagnostic) {
    Network<double> G = identity_net("G", 2, false), E = identity_net("E", 2, true), D = half_critic(4);
    Rng rng(7);
    const Tensor<double> x = make_gauss8(8, 1.0, 0.05, rng).range<double>(0, 8);
    const Tensor<double> z = sample_unit_sphere_batch<double>(8, 2, rng);
    const auto t = bigan_value(G, E, D, x, z, LossWeights{});
    EXPECT_NEAR(t.adv_d.item(), -2.0 * kLn2, 1e-12);
    EXPECT_FALSE(t.distance.requires_grad());
    EXPECT_TRUE(t.distance.is_leaf());
}

TEST(JointInput, ConcatenatesFlattenedData) {
    const Tensor<double> z = batch_of({1, 2}, 2);
    const Tensor<double> x({1, 1, 1, 2}, {3, 4});
    const Tensor<double> j = joint_input(z, x);
    EXPECT_EQ(j.shape(), (Shape{1, 4}));
    EXPECT_EQ(j.values(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Objectives, LossesFiniteOnRandomInputs) {
    Rng rng(8);
    ModelSpec s;
    s.arch = Arch::conv;
    s.data_shape = {3, 8, 8};
    s.widths = {2, 4};
    s.latent_dim = 4;
    Network<double> G = build_generator<double>(s, rng), E = build_encoder<double>(s, rng),
                    D = build_discriminator<double>(s, rng), Dl = build_latent_discriminator<double>(s, rng),
                    Dj = build_joint_discriminator<double>(s, rng);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor<double> x({4, 3, 8, 8});
        for (double& v : x.data()) v = rng.uniform();
        const Tensor<double> z = sample_unit_sphere_batch<double>(4, 4, rng);
        for (const auto& t : {faae_value(G, E, D, x, z, LossWeights{}), aae_value(G, E, Dl, x, z, LossWeights{}),
                              bigan_value(G, E, Dj, x, z, LossWeights{})}) {
            EXPECT_TRUE(std::isfinite(t.adv_d.item()));
            EXPECT_TRUE(std::isfinite(t.adv_g.item()));
            EXPECT_TRUE(std::isfinite(t.distance.item()));
            EXPECT_GE(t.distance.item(), 0.0);
        }
    }
}
