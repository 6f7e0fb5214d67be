#include <gtest/gtest.h>

#include <cmath>

#include "faae/error.hpp"
#include "faae/gradcheck.hpp"
#include "faae/layers.hpp"
#include "faae/ops.hpp"

using namespace faae;

namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

Tensor<double> no_bias(std::size_t n) { return Tensor<double>::zeros({n}); }

}  // namespace

TEST(Dense, Examples) {
    Tensor<double> x({1, 2}, {1, 1}), w({2, 1}, {1, 1}), b({1}, {1});
    EXPECT_EQ(dense_forward(x, w, b).values(), std::vector<double>{3});

    Tensor<double> eye({2, 2}, {1, 0, 0, 1});
    Tensor<double> y({3, 2}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(dense_forward(y, eye, no_bias(2)).values(), y.values());

    const Tensor<double> empty = dense_forward(Tensor<double>({0, 2}, {}), w, b);
    EXPECT_EQ(empty.shape(), (Shape{0, 1}));
    EXPECT_THROW(dense_forward(y, Tensor<double>::zeros({3, 1}), b), DimensionError);
}

TEST(Conv2d, IdentityKernel) {
    Rng rng(1);
    Tensor<double> x = random_tensor({2, 1, 3, 4}, rng);
    Tensor<double> k({1, 1, 1, 1}, {1});
    EXPECT_EQ(conv2d_forward(x, k, no_bias(1), 1, 0).values(), x.values());
}

TEST(Conv2d, OnesSumToNine) {
    Tensor<double> x = Tensor<double>::full({1, 1, 3, 3}, 1.0);
    Tensor<double> k = Tensor<double>::full({1, 1, 3, 3}, 1.0);
    const Tensor<double> y = conv2d_forward(x, k, no_bias(1), 1, 0);
    EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
    EXPECT_EQ(y.item(), 9.0);
}

TEST(Conv2d, OutputSizeFormula) {
    Rng rng(2);
    for (std::size_t h : {3u, 5u, 8u})
        for (std::size_t k : {1u, 3u})
            for (std::size_t s : {1u, 2u})
                for (std::size_t p : {0u, 1u}) {
                    Tensor<double> x = random_tensor({1, 2, h, h + 1}, rng);
                    Tensor<double> kern = random_tensor({3, 2, k, k}, rng);
                    const Tensor<double> y = conv2d_forward(x, kern, no_bias(3), s, p);
                    EXPECT_EQ(y.dim(2), (h + 2 * p - k) / s + 1);
                    EXPECT_EQ(y.dim(3), (h + 1 + 2 * p - k) / s + 1);
                }
}

TEST(Conv2d, ZeroPaddingMatchesManualSum) {
    // Centre-tap 3x3 kernel with padding 1 leaves the input unchanged; a corner
    // tap shifts it and fills the border with zeros.
    Tensor<double> x({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor<double> centre({1, 1, 3, 3}, {0, 0, 0, 0, 1, 0, 0, 0, 0});
    EXPECT_EQ(conv2d_forward(x, centre, no_bias(1), 1, 1).values(), x.values());
    Tensor<double> corner({1, 1, 3, 3}, {1, 0, 0, 0, 0, 0, 0, 0, 0});
    EXPECT_EQ(conv2d_forward(x, corner, no_bias(1), 1, 1).values(), (std::vector<double>{0, 0, 0, 1}));
}

TEST(Conv2d, KernelLargerThanInput) {
    Tensor<double> x = Tensor<double>::zeros({1, 1, 2, 2});
    Tensor<double> k = Tensor<double>::zeros({1, 1, 3, 3});
    EXPECT_THROW(conv2d_forward(x, k, no_bias(1), 1, 0), DimensionError);
}

TEST(Conv2d, GradCheck) {
    Rng rng(3);
    Tensor<double> x = random_tensor({2, 2, 4, 3}, rng), k = random_tensor({3, 2, 3, 3}, rng),
                   b = random_tensor({3}, rng);
    const auto r = grad_check([&] { return sum(square(conv2d_forward(x, k, b, 2, 1))); },
                              std::vector<Tensor<double>>{x, k, b});
    EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(Upsample2d, Replicates) {
    Tensor<double> x({1, 1, 2, 2}, {1, 2, 3, 4});
    const Tensor<double> y = upsample2d_forward(x, 2);
    EXPECT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
    EXPECT_EQ(y.values(), (std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
    EXPECT_EQ(upsample2d_forward(x, 1).values(), x.values());
    EXPECT_DOUBLE_EQ(mean(y).item(), mean(x).item());
}

TEST(Upsample2d, BackwardSumsBlocks) {
    Tensor<double> x({1, 1, 1, 2}, {1, 2});
    x.set_requires_grad();
    backward(sum(upsample2d_forward(x, 3)));
    EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{9, 9}));
}

TEST(MaxPool2d, Examples) {
    Tensor<double> x({1, 1, 2, 2}, {1, 2, 3, 4});
    EXPECT_EQ(maxpool2d_forward(x, 2, 2).values(), std::vector<double>{4});
    Tensor<double> c = Tensor<double>::full({1, 2, 4, 4}, 0.7);
    const Tensor<double> pooled = maxpool2d_forward(c, 2, 2);
    for (double v : pooled.values()) EXPECT_EQ(v, 0.7);
    Rng rng(4);
    Tensor<double> r = random_tensor({2, 1, 4, 4}, rng);
    Tensor<double> shifted = add(r, Tensor<double>::scalar(2.5));
    const auto a = maxpool2d_forward(r, 2, 2).values();
    const auto b = maxpool2d_forward(shifted, 2, 2).values();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(b[i], a[i] + 2.5);
    EXPECT_THROW(maxpool2d_forward(x, 3, 1), DimensionError);
}

TEST(MaxPool2d, TieGoesToFirstIndex) {
    Tensor<double> x({1, 1, 2, 2}, {5, 5, 5, 5});
    x.set_requires_grad();
    backward(sum(maxpool2d_forward(x, 2, 2)));
    EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1, 0, 0, 0}));
}

TEST(BatchNorm, TrainModeNormalizes) {
    Rng rng(5);
    Tensor<double> x = random_tensor({6, 3, 2, 2}, rng, -3, 5);
    BatchNormStats<double> stats{Tensor<double>::zeros({3}), Tensor<double>::full({3}, 1.0)};
    const Tensor<double> y = batchnorm_forward(x, Tensor<double>::full({3}, 1.0), no_bias(3), stats,
                                               Mode::train, 0.99, 1e-5);
    for (std::size_t c = 0; c < 3; ++c) {
        double m = 0, v = 0;
        std::size_t n = 0;
        for (std::size_t b = 0; b < 6; ++b)
            for (std::size_t i = 0; i < 4; ++i, ++n) m += y.at((b * 3 + c) * 4 + i);
        m /= static_cast<double>(n);
        for (std::size_t b = 0; b < 6; ++b)
            for (std::size_t i = 0; i < 4; ++i) v += std::pow(y.at((b * 3 + c) * 4 + i) - m, 2);
        v /= static_cast<double>(n);
        EXPECT_NEAR(m, 0.0, 1e-12);
        EXPECT_NEAR(v, 1.0, 1e-4);
    }
}

TEST(BatchNorm, ZeroGammaGivesBeta) {
    Rng rng(6);
    Tensor<double> x = random_tensor({4, 2}, rng);
    BatchNormStats<double> stats{Tensor<double>::zeros({2}), Tensor<double>::full({2}, 1.0)};
    Tensor<double> beta({2}, {0.5, -2});
    const Tensor<double> y = batchnorm_forward(x, Tensor<double>::zeros({2}), beta, stats, Mode::train, 0.99, 1e-5);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(y.at(2 * i), 0.5);
        EXPECT_EQ(y.at(2 * i + 1), -2.0);
    }
}

TEST(BatchNorm, RunningStatsAndEvalMode) {
    Tensor<double> x({2, 1}, {1, 3});
    BatchNormStats<double> stats{Tensor<double>::zeros({1}), Tensor<double>::full({1}, 1.0)};
    Tensor<double> gamma({1}, {2}), beta({1}, {1});
    batchnorm_forward(x, gamma, beta, stats, Mode::train, 0.9, 1e-5);
    // Batch mean 2, unbiased variance 2.
    EXPECT_NEAR(stats.running_mean.item(), 0.2, 1e-15);
    EXPECT_NEAR(stats.running_var.item(), 0.9 + 0.1 * 2.0, 1e-15);

    const double rm = stats.running_mean.item(), rv = stats.running_var.item();
    Tensor<double> probe({3, 1}, {-1, 0, 4});
    const Tensor<double> y = batchnorm_forward(probe, gamma, beta, stats, Mode::eval, 0.9, 1e-5);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(y.at(i), 2.0 * (probe.at(i) - rm) / std::sqrt(rv + 1e-5) + 1.0, 1e-12);
    EXPECT_EQ(stats.running_mean.item(), rm);
}

TEST(BatchNorm, TrainNeedsTwoSamples) {
    BatchNormStats<double> stats{Tensor<double>::zeros({1}), Tensor<double>::full({1}, 1.0)};
    EXPECT_THROW(batchnorm_forward(Tensor<double>({1, 1}, {1}), Tensor<double>::full({1}, 1.0), no_bias(1),
                                   stats, Mode::train, 0.99, 1e-5),
                 ContractError);
}

TEST(BatchNorm, GradCheck) {
    Rng rng(7);
    Tensor<double> x = random_tensor({4, 2, 2, 2}, rng), g = random_tensor({2}, rng, 0.5, 1.5),
                   b = random_tensor({2}, rng), w = random_tensor({4, 2, 2, 2}, rng);
    BatchNormStats<double> stats{Tensor<double>::zeros({2}), Tensor<double>::full({2}, 1.0)};
    const auto r = grad_check(
        [&] { return sum(mul(batchnorm_forward(x, g, b, stats, Mode::train, 0.99, 1e-5), w)); },
        std::vector<Tensor<double>>{x, g, b});
    EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(LayerSpec, Validation) {
    EXPECT_THROW(LayerSpec::Dense(0).validate(), ContractError);
    EXPECT_THROW(LayerSpec::Conv2d(4, 0).validate(), ContractError);
    EXPECT_THROW(LayerSpec::Upsample2d(0).validate(), ContractError);
    EXPECT_THROW(LayerSpec::BatchNorm(1.5).validate(), ContractError);
    EXPECT_THROW(LayerSpec::BatchNorm(0.99, 0.0).validate(), ContractError);
    EXPECT_THROW(LayerSpec::LeakyRelu(1.0).validate(), ContractError);
    EXPECT_NO_THROW(LayerSpec::Conv2d(4, 3).validate());
    EXPECT_EQ(LayerSpec::Conv2d(4, 3).padding, 1u);
}

TEST(LayerSpec, TextRoundTrip) {
    const std::vector<LayerSpec> specs = {
        LayerSpec::Dense(7),          LayerSpec::Conv2d(16, 3, 2, 0), LayerSpec::Upsample2d(2),
        LayerSpec::MaxPool2d(2, 2),   LayerSpec::BatchNorm(0.9, 1e-3), LayerSpec::LeakyRelu(0.2),
        LayerSpec::Sigmoid(),         LayerSpec::Flatten(),           LayerSpec::Reshape({4, 2, 2}),
        LayerSpec::Normalize(),
    };
    for (const auto& s : specs) EXPECT_EQ(parse_layer_spec(to_string(s)), s) << to_string(s);
    EXPECT_EQ(to_string(LayerSpec::Conv2d(16, 3)), "conv2d filters=16 kernel=3 stride=1 padding=1");
    EXPECT_THROW(parse_layer_spec("bogus units=3"), IoError);
}

TEST(Layer, InferredShapeMatchesForward) {
    struct Case {
        LayerSpec spec;
        Shape input;
    };
    const std::vector<Case> corpus = {
        {LayerSpec::Dense(5), {3}},
        {LayerSpec::Conv2d(4, 3), {2, 6, 6}},
        {LayerSpec::Conv2d(4, 3, 2, 0), {2, 7, 5}},
        {LayerSpec::Upsample2d(3), {1, 2, 2}},
        {LayerSpec::MaxPool2d(2, 2), {3, 5, 4}},
        {LayerSpec::BatchNorm(), {3, 2, 2}},
        {LayerSpec::BatchNorm(), {4}},
        {LayerSpec::LeakyRelu(), {2, 3, 3}},
        {LayerSpec::Sigmoid(), {6}},
        {LayerSpec::Flatten(), {2, 3, 3}},
        {LayerSpec::Reshape({2, 2, 2}), {8}},
        {LayerSpec::Normalize(), {5}},
    };
    Rng rng(8);
    for (const auto& c : corpus) {
        Layer<double> layer(c.spec, c.input, rng);
        Shape batch_shape = c.input;
        batch_shape.insert(batch_shape.begin(), 3);
        const Tensor<double> y = layer.forward(random_tensor(batch_shape, rng), Mode::train);
        Shape expected = infer_output_shape(c.spec, c.input);
        expected.insert(expected.begin(), 3);
        EXPECT_EQ(y.shape(), expected) << to_string(c.spec);
    }
    EXPECT_THROW(infer_output_shape(LayerSpec::Reshape({3}), {4}), DimensionError);
    EXPECT_THROW(infer_output_shape(LayerSpec::MaxPool2d(4, 1), {1, 3, 3}), DimensionError);
}

TEST(Layer, InitialisationRanges) {
    Rng rng(9);
    Layer<double> dense(LayerSpec::Dense(30), {20}, rng);
    const double bound = std::sqrt(6.0 / 50.0);
    for (double v : dense.params()[0].second.values()) EXPECT_LE(std::abs(v), bound);
    for (double v : dense.params()[1].second.values()) EXPECT_EQ(v, 0.0);
    Layer<double> bn(LayerSpec::BatchNorm(), {3, 2, 2}, rng);
    EXPECT_EQ(bn.params()[0].second.values(), std::vector<double>(3, 1.0));
    EXPECT_EQ(bn.buffers().size(), 2u);
    EXPECT_FALSE(bn.buffers()[0].second.requires_grad());
}

TEST(Layer, SigmoidStaysInUnitInterval) {
    Rng rng(10);
    Layer<double> s(LayerSpec::Sigmoid(), {4}, rng);
    const Tensor<double> y = s.forward(random_tensor({8, 4}, rng, -30, 30), Mode::eval);
    for (double v : y.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}
