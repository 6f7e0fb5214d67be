#include <gtest/gtest.h>

#include <cmath>

#include "faae/error.hpp"
#include "faae/gradcheck.hpp"
#include "faae/ops.hpp"
#include "faae/rng.hpp"
#include "faae/tensor.hpp"

using namespace faae;

TEST(Tensor, ShapeAndValues) {
    Tensor<float> t({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(t.rank(), 2u);
    EXPECT_EQ(t.dim(1), 3u);
    EXPECT_EQ(t.numel(), 6u);
    EXPECT_EQ(t.at(4), 5.0f);
    EXPECT_TRUE(t.is_leaf());
    EXPECT_FALSE(t.has_grad());
}

TEST(Tensor, RejectsMismatchedValueCount) {
    EXPECT_THROW(Tensor<float>({2, 2}, {1, 2, 3}), DimensionError);
}

TEST(Tensor, ItemNeedsOneElement) {
    EXPECT_EQ(Tensor<double>::scalar(2.5).item(), 2.5);
    EXPECT_THROW(Tensor<double>::zeros({2}).item(), ContractError);
}

TEST(Tensor, CopiesAliasAndDetachCopies) {
    Tensor<float> a({2}, {1, 2});
    Tensor<float> b = a;
    b.data()[0] = 7;
    EXPECT_EQ(a.at(0), 7.0f);
    Tensor<float> c = a.detach();
    c.data()[0] = 1;
    EXPECT_EQ(a.at(0), 7.0f);
    EXPECT_FALSE(c.same_storage(a));
}

TEST(Tensor, OnlyLeavesToggleTracking) {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad();
    Tensor<double> y = square(x);
    EXPECT_FALSE(y.is_leaf());
    EXPECT_THROW(y.set_requires_grad(false), ContractError);
}

TEST(Backward, SumGivesOnes) {
    Tensor<double> x({2, 3}, {1, -2, 3, 0.5, 8, -1});
    x.set_requires_grad();
    backward(sum(x));
    for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, MeanSquareOfThree) {
    Tensor<double> x({1}, {3});
    x.set_requires_grad();
    backward(mean(square(x)));
    EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Backward, DetachedLeafUntouched) {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad();
    Tensor<double> y({2}, {3, 4});
    y.set_requires_grad();
    backward(sum(square(x.detach().set_requires_grad())));
    backward(sum(y));
    EXPECT_FALSE(x.has_grad());
}

TEST(Backward, NonScalarIsContractError) {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad();
    EXPECT_THROW(backward(square(x)), ContractError);
}

TEST(Backward, AccumulatesAcrossBranches) {
    Tensor<double> x({3}, {0.5, -1.5, 2.0});
    x.set_requires_grad();
    backward(add(sum(square(x)), sum(scale(x, 3.0))));
    Tensor<double> a = x.detach(), b = x.detach();
    a.set_requires_grad();
    b.set_requires_grad();
    backward(sum(square(a)));
    backward(sum(scale(b, 3.0)));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(x.grad()[i], a.grad()[i] + b.grad()[i]);
}

TEST(Backward, LinearInTheLoss) {
    Tensor<double> x({3}, {0.3, -0.7, 1.1});
    x.set_requires_grad();
    auto f = [](const Tensor<double>& t) { return mean(sigmoid(t)); };
    auto g = [](const Tensor<double>& t) { return sum(square(t)); };
    backward(add(scale(f(x), 2.0), scale(g(x), -0.5)));
    std::vector<double> combined(x.grad().begin(), x.grad().end());
    x.zero_grad();
    backward(f(x));
    std::vector<double> gf(x.grad().begin(), x.grad().end());
    x.zero_grad();
    backward(g(x));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(combined[i], 2.0 * gf[i] - 0.5 * x.grad()[i], 1e-15);
}

TEST(Backward, RepeatedRunsAreBitIdentical) {
    auto run = [] {
        Rng rng(5);
        Tensor<double> w({3, 4});
        for (double& v : w.data()) v = rng.normal();
        w.set_requires_grad();
        Tensor<double> x({2, 3}, {0.1, 0.2, 0.3, -0.4, 0.5, -0.6});
        Tensor<double> loss = mean(sigmoid(matmul(x, w)));
        backward(loss);
        std::vector<double> out(w.grad().begin(), w.grad().end());
        out.push_back(loss.item());
        return out;
    };
    EXPECT_EQ(run(), run());
}

TEST(NoGrad, NoNodeRecorded) {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad();
    {
        NoGradGuard guard;
        EXPECT_FALSE(grad_recording_enabled());
        EXPECT_TRUE(square(x).is_leaf());
    }
    EXPECT_TRUE(grad_recording_enabled());
    EXPECT_FALSE(square(x).is_leaf());
}

TEST(Graph, TopologicalOrder) {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad();
    Tensor<double> loss = mean(add(square(x), x));
    const Graph<double> g = Graph<double>::trace(loss);
    ASSERT_EQ(g.size(), 3u);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (long in : g.entries()[i].inputs) EXPECT_LT(in, static_cast<long>(i));
    EXPECT_EQ(std::string(g.entries().back().op), "reduce_mean");
}

TEST(Graph, IntermediateGradientsReleased) {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad();
    Tensor<double> y = square(x);
    backward(sum(y));
    EXPECT_FALSE(y.has_grad());
    EXPECT_TRUE(x.has_grad());
}

TEST(GradCheck, LinearIsExact) {
    Tensor<double> x({4}, {0.1, -2, 3, 4});
    EXPECT_LT(grad_check([](const Tensor<double>& t) { return sum(t); }, x), 1e-10);
}

TEST(GradCheck, ConstantIsZero) {
    Tensor<double> x({3}, {1, 2, 3});
    EXPECT_EQ(grad_check([](const Tensor<double>& t) { return add(scale(sum(t), 0.0), Tensor<double>::scalar(4)); }, x),
              0.0);
}

TEST(GradCheck, SigmoidOfMatmul) {
    Rng rng(11);
    Tensor<double> w({3, 3}), x({3, 2});
    for (double& v : w.data()) v = rng.uniform(-1, 1);
    for (double& v : x.data()) v = rng.uniform(-1, 1);
    const GradCheckResult r =
        grad_check([&] { return mean(sigmoid(matmul(w, x))); }, std::vector<Tensor<double>>{w, x}, 1e-4);
    EXPECT_LT(r.max_relative_error, 1e-4);
    EXPECT_EQ(r.coordinates, 15u);
}

TEST(GradCheck, NonFiniteNamesCoordinate) {
    Tensor<double> x({2}, {1.0, std::nan("")});
    try {
        grad_check([](const Tensor<double>& t) { return sum(t); }, x);
        FAIL() << "expected an error";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("coordinate 1"), std::string::npos);
    }
}

TEST(SmoothnessProbe, ReportsDistanceToKink) {
    SmoothnessProbe probe;
    Tensor<double> x({3}, {0.5, -0.02, 2.0});
    leaky_relu(x, 0.2);
    EXPECT_NEAR(probe.min_margin(), 0.02, 1e-12);
}

TEST(Rng, KnownStream) {
    // Reference values from an independent xoshiro256** / splitmix64 implementation.
    Rng rng(0);
    EXPECT_EQ(rng.next_u64(), 0x99ec5f36cb75f2b4ull);
    EXPECT_EQ(rng.next_u64(), 0xbf6e1f784956452aull);
}

TEST(Rng, BelowIsInRange) {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(7), 7u);
    EXPECT_THROW(rng.below(0), ContractError);
}
