#include <gtest/gtest.h>

#include <cmath>

#include "faae/error.hpp"
#include "faae/evaluation.hpp"
#include "faae/trainer.hpp"

using namespace faae;

namespace {

LatentVector vec(std::vector<float> v) {
    LatentVector out;
    out.values = std::move(v);
    return out;
}

// Dense layer with weight scale * I and zero bias, optionally projected.
Network<float> scaled_identity(const std::string& name, float scale, bool project) {
    Rng rng(0);
    std::vector<LayerSpec> specs{LayerSpec::Dense(2)};
    if (project) specs.push_back(LayerSpec::Normalize());
    Network<float> net(name, {2}, specs, rng);
    auto w = net.parameter("0.dense.weight").data();
    w[0] = scale, w[1] = 0.0f, w[2] = 0.0f, w[3] = scale;
    auto b = net.parameter("0.dense.bias").data();
    std::fill(b.begin(), b.end(), 0.0f);
    return net;
}

Network<float> constant_critic(float bias) {
    Rng rng(0);
    Network<float> net("D", {2}, {LayerSpec::Dense(1), LayerSpec::Sigmoid()}, rng);
    auto w = net.parameter("0.dense.weight").data();
    std::fill(w.begin(), w.end(), 0.0f);
    net.parameter("0.dense.bias").data()[0] = bias;
    return net;
}

TrainConfig sprite_config() {
    TrainConfig c;
    c.dataset.kind = DatasetKind::sprites;
    c.dataset.count = 12;
    c.dataset.size = 8;
    c.batch_size = 4;
    c.epochs = 1;
    c.latent_dim = 4;
    c.model.widths = {2, 4};
    return c;
}

std::vector<std::vector<float>> state_of(const Network<float>& net) {
    std::vector<std::vector<float>> out;
    for (const auto& p : net.parameters()) out.push_back(p.tensor.values());
    for (const auto& b : net.buffers()) out.push_back(b.tensor.values());
    return out;
}

}  // namespace

TEST(Morph, SingleWeightReturnsAnchor) {
    Rng rng(1);
    const std::array<LatentVector, 4> a{sample_unit_sphere(5, rng), sample_unit_sphere(5, rng),
                                        sample_unit_sphere(5, rng), sample_unit_sphere(5, rng)};
    EXPECT_EQ(morph(a, {{1, 0, 0, 0}}).values, a[0].values);
    EXPECT_EQ(morph(a, {{0, 0, 2.5, 0}}).values, a[2].values);
}

TEST(Morph, OppositeAnchorsDegenerate) {
    const LatentVector z1 = vec({0.6f, 0.8f}), z2 = vec({-0.6f, -0.8f});
    EXPECT_THROW(morph({z1, z2, z1, z1}, {{1, 1, 0, 0}}), DegeneracyError);
    EXPECT_THROW(morph({z1, z2, z1, z1}, {{0, 0, 0, 0}}), DegeneracyError);
}

TEST(Morph, OrthonormalMidpoint) {
    const LatentVector e1 = vec({1, 0}), e2 = vec({0, 1});
    const LatentVector m = morph({e1, e2, e1, e2}, {{0.5, 0.5, 0, 0}});
    EXPECT_NEAR(m.values[0], 1.0 / std::sqrt(2.0), 1e-7);
    EXPECT_NEAR(m.values[1], 1.0 / std::sqrt(2.0), 1e-7);
    EXPECT_NEAR(m.norm(), 1.0, 1e-6);
}

TEST(Morph, ScaleInvariance) {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const std::array<LatentVector, 4> a{sample_unit_sphere(8, rng), sample_unit_sphere(8, rng),
                                            sample_unit_sphere(8, rng), sample_unit_sphere(8, rng)};
        MorphWeights w, scaled;
        const double c = rng.uniform(0.01, 100.0);
        for (std::size_t k = 0; k < 4; ++k) {
            w.alphas[k] = rng.uniform(-1.0, 1.0);
            scaled.alphas[k] = c * w.alphas[k];
        }
        EXPECT_EQ(morph(a, w).values, morph(a, scaled).values);
    }
}

TEST(Morph, ContractChecks) {
    const LatentVector e1 = vec({1, 0});
    EXPECT_THROW(morph({vec({2, 0}), e1, e1, e1}, {}), ContractError);
    EXPECT_THROW(morph({e1, vec({1, 0, 0}), e1, e1}, {}), ContractError);
    EXPECT_THROW(morph({e1, e1, e1, e1}, {{std::nan(""), 0, 0, 0}}), ContractError);
}

TEST(GridWeights, CornersAndPartition) {
    EXPECT_EQ(grid_weights(0, 0, 5).alphas, (std::array<double, 4>{1, 0, 0, 0}));
    EXPECT_EQ(grid_weights(4, 0, 5).alphas, (std::array<double, 4>{0, 1, 0, 0}));
    EXPECT_EQ(grid_weights(0, 4, 5).alphas, (std::array<double, 4>{0, 0, 1, 0}));
    EXPECT_EQ(grid_weights(4, 4, 5).alphas, (std::array<double, 4>{0, 0, 0, 1}));
    const auto mid = grid_weights(1, 1, 3).alphas;
    for (double v : mid) EXPECT_EQ(v, 0.25);
    EXPECT_THROW(grid_weights(0, 0, 1), ContractError);
    EXPECT_THROW(grid_weights(3, 0, 3), ContractError);
}

TEST(MorphGrid, CornersMatchReconstructions) {
    Trainer t(sprite_config());
    t.train();
    const Tensor<float> corners = t.dataset().batch<float>(std::vector<std::size_t>{0, 3, 5, 7});
    const Tensor<float> recon = reconstruct(t.encoder(), t.generator(), corners);
    const std::size_t per = recon.numel() / 4;
    for (std::size_t n : {2u, 3u, 5u}) {
        const Tensor<float> cells = morph_grid(t.encoder(), t.generator(), corners, n);
        ASSERT_EQ(cells.dim(0), n * n);
        const std::size_t index[4] = {0, n - 1, (n - 1) * n, n * n - 1};
        for (std::size_t k = 0; k < 4; ++k)
            for (std::size_t i = 0; i < per; ++i)
                ASSERT_EQ(cells.at(index[k] * per + i), recon.at(k * per + i)) << "grid " << n << " corner " << k;
        if (n == 2) EXPECT_EQ(cells.values(), recon.values());
    }
    EXPECT_THROW(morph_grid(t.encoder(), t.generator(), corners, 1), ContractError);
    const Tensor<float> three = t.dataset().batch<float>(std::vector<std::size_t>{0, 1, 2});
    EXPECT_THROW(morph_grid(t.encoder(), t.generator(), three, 3), ContractError);
}

TEST(Reconstruct, IdentityPair) {
    Network<float> E = scaled_identity("E", 1.0f, true), G = scaled_identity("G", 1.0f, false);
    const Tensor<float> x({2, 2}, {0.6f, 0.8f, 0.0f, -1.0f});
    EXPECT_EQ(reconstruct(E, G, x).values(), x.values());
    EXPECT_THROW(reconstruct(E, G, Tensor<float>::zeros({2, 3})), ContractError);
}

TEST(Generate, CountAndSeed) {
    Trainer t(sprite_config());
    Rng a(7), b(7);
    const Tensor<float> x = generate(t.generator(), 3, a);
    EXPECT_EQ(x.shape(), (Shape{3, 3, 8, 8}));
    EXPECT_EQ(x.values(), generate(t.generator(), 3, b).values());
    EXPECT_EQ(generate(t.generator(), 0, a).shape(), (Shape{0, 3, 8, 8}));
}

TEST(Evaluate, IdentityStubsAreExact) {
    Network<float> E = scaled_identity("E", 1.0f, true), G = scaled_identity("G", 1.0f, false);
    Network<float> D = constant_critic(1.0f);
    Rng rng(3);
    const Dataset ds = make_gauss8(500, 1.0, 1e-6, rng);
    const MetricReport r = evaluate(E, G, D, CriticSpace::data, ds, 400, rng);
    EXPECT_NEAR(r.recon_mse, 0.0, 1e-10);
    EXPECT_NEAR(r.reenc_mse, 0.0, 1e-12);
    EXPECT_EQ(r.disc_accuracy, 0.5);
    EXPECT_EQ(r.samples_evaluated, 400u);
}

TEST(Evaluate, CoverageOfCircleAndCollapse) {
    Rng rng(4);
    const Dataset ds = make_gauss8(200, 2.0, 0.02, rng);
    Network<float> E = scaled_identity("E", 1.0f, true), D = constant_critic(0.0f);
    Network<float> circle = scaled_identity("G", 2.0f, false);
    EXPECT_EQ(evaluate(E, circle, D, CriticSpace::data, ds, 1000, rng).mode_coverage, 8u);
    Network<float> point = scaled_identity("G", 0.0f, false);
    point.parameter("0.dense.bias").data()[0] = 2.0f;
    EXPECT_EQ(evaluate(E, point, D, CriticSpace::data, ds, 1000, rng).mode_coverage, 1u);
}

TEST(Evaluate, UntrainedCriticNearChance) {
    TrainConfig c;
    c.dataset.count = 2000;
    c.epochs = 0;
    Trainer t(c);
    Rng rng(5);
    const MetricReport r =
        evaluate(t.encoder(), t.generator(), t.discriminator(), CriticSpace::data, t.dataset(), 1000, rng);
    EXPECT_GE(r.disc_accuracy, 0.2);
    EXPECT_LE(r.disc_accuracy, 0.8);
    EXPECT_GT(r.recon_mse, 0.0);
}

TEST(Evaluate, ReadOnlyAndDeterministic) {
    for (Objective o : {Objective::faae, Objective::aae, Objective::bigan}) {
        TrainConfig c = sprite_config();
        c.objective = o;
        Trainer t(c);
        t.train();
        const auto g0 = state_of(t.generator()), e0 = state_of(t.encoder()), d0 = state_of(t.discriminator());
        const CriticSpace space =
            o == Objective::aae ? CriticSpace::latent : o == Objective::bigan ? CriticSpace::joint : CriticSpace::data;
        Rng a(6), b(6);
        const MetricReport r1 = evaluate(t.encoder(), t.generator(), t.discriminator(), space, t.dataset(), 8, a);
        const MetricReport r2 = evaluate(t.encoder(), t.generator(), t.discriminator(), space, t.dataset(), 8, b);
        EXPECT_EQ(r1, r2);
        EXPECT_EQ(state_of(t.generator()), g0);
        EXPECT_EQ(state_of(t.encoder()), e0);
        EXPECT_EQ(state_of(t.discriminator()), d0);
        EXPECT_EQ(r1.mode_coverage, 0u);
    }
}

TEST(Evaluate, Checks) {
    Network<float> E = scaled_identity("E", 1.0f, true), G = scaled_identity("G", 1.0f, false);
    Network<float> D = constant_critic(0.0f);
    Rng rng(8);
    const Dataset ds = make_gauss8(10, 2.0, 0.02, rng);
    EXPECT_THROW(evaluate(E, G, D, CriticSpace::data, ds, 0, rng), ContractError);
    EXPECT_EQ(metric_csv_header(), "recon_mse,reenc_mse,disc_accuracy,mode_coverage,samples_evaluated");
    EXPECT_EQ(metric_csv_row({0.5, 0.25, 0.75, 8, 10}), "0.5,0.25,0.75,8,10");
}
