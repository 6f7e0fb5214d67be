#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "faae/error.hpp"
#include "faae/optim.hpp"

using namespace faae;

namespace {

NamedTensor<double> param(const std::string& name, std::vector<double> values) {
    const std::size_t n = values.size();
    Tensor<double> t({n}, std::move(values));
    t.set_requires_grad();
    return {name, t};
}

void set_grad(NamedTensor<double>& p, const std::vector<double>& g) {
    auto dst = p.tensor.grad();
    std::copy(g.begin(), g.end(), dst.begin());
}

}  // namespace

TEST(DecayedLr, Examples) {
    EXPECT_EQ(decayed_lr(3e-4, 1e-4, 0), 3e-4);
    EXPECT_EQ(decayed_lr(3e-4, 0.0, 123456), 3e-4);
    EXPECT_DOUBLE_EQ(decayed_lr(1e-3, 1e-4, 10000), 5e-4);
    double previous = decayed_lr(1e-3, 1e-4, 0);
    for (std::uint64_t s = 1; s < 2000; s += 37) {
        const double lr = decayed_lr(1e-3, 1e-4, s);
        EXPECT_LT(lr, previous);
        previous = lr;
    }
}

TEST(AdamUpdate, ZeroGradientLeavesParameters) {
    std::vector<NamedTensor<double>> ps{param("w", {1.5, -2.0, 0.25})};
    ps[0].tensor.zero_grad();
    AdamState st;
    adam_update<double>(ps, st, 1e-3);
    EXPECT_EQ(ps[0].tensor.values(), (std::vector<double>{1.5, -2.0, 0.25}));
    EXPECT_EQ(st.t, 1u);
}

TEST(AdamUpdate, FirstStepMovesBySignTimesRate) {
    std::vector<NamedTensor<double>> ps{param("w", {1.0, 1.0, 1.0})};
    set_grad(ps[0], {0.3, -7.0, 1e-3});
    AdamState st;
    adam_update<double>(ps, st, 0.01);
    // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    const std::vector<double> g{0.3, -7.0, 1e-3};
    for (std::size_t i = 0; i < 3; ++i) {
        const double expected = 1.0 - 0.01 * g[i] / (std::abs(g[i]) + 1e-8);
        EXPECT_DOUBLE_EQ(ps[0].tensor.at(i), expected);
        EXPECT_NEAR(ps[0].tensor.at(i), 1.0 - 0.01 * (g[i] > 0 ? 1 : -1), 1e-7);
    }
}

TEST(AdamUpdate, SecondStepMatchesRecurrence) {
    std::vector<NamedTensor<double>> ps{param("w", {0.0})};
    AdamState st;
    set_grad(ps[0], {2.0});
    adam_update<double>(ps, st, 0.1);
    ps[0].tensor.zero_grad();
    set_grad(ps[0], {-1.0});
    adam_update<double>(ps, st, 0.1);
    const double m1 = 0.1 * 2.0, v1 = 0.001 * 4.0;
    const double w1 = -0.1 * (m1 / 0.1) / (std::sqrt(v1 / 0.001) + 1e-8);
    const double m2 = 0.9 * m1 + 0.1 * -1.0, v2 = 0.999 * v1 + 0.001 * 1.0;
    const double w2 = w1 - 0.1 * (m2 / (1 - 0.81)) / (std::sqrt(v2 / (1 - 0.999 * 0.999)) + 1e-8);
    EXPECT_NEAR(ps[0].tensor.at(0), w2, 1e-15);
    EXPECT_EQ(st.t, 2u);
}

TEST(AdamUpdate, Deterministic) {
    auto run = [] {
        std::vector<NamedTensor<double>> ps{param("a", {0.1, 0.2}), param("b", {-0.3})};
        AdamState st;
        for (int k = 0; k < 5; ++k) {
            set_grad(ps[0], {0.5 * k, -0.25});
            set_grad(ps[1], {1.0 / (k + 1)});
            adam_update<double>(ps, st, 1e-2);
        }
        return std::make_pair(ps[0].tensor.values(), st);
    };
    EXPECT_EQ(run(), run());
}

TEST(AdamUpdate, NonFiniteGradientAbortsBeforeAnyChange) {
    std::vector<NamedTensor<double>> ps{param("first", {1.0}), param("second", {2.0, 3.0})};
    set_grad(ps[0], {0.5});
    set_grad(ps[1], {0.1, std::numeric_limits<double>::infinity()});
    AdamState st;
    try {
        adam_update<double>(ps, st, 1e-3);
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("second"), std::string::npos);
    }
    EXPECT_EQ(ps[0].tensor.at(0), 1.0);
    EXPECT_EQ(st.t, 0u);
}

TEST(AdamUpdate, RateChecks) {
    std::vector<NamedTensor<double>> ps{param("w", {1.0})};
    AdamState st;
    EXPECT_THROW(adam_update<double>(ps, st, 0.0), ContractError);
    const std::vector<double> two{1e-3, 1e-3};
    EXPECT_THROW(adam_update<double>(ps, st, two), ContractError);
}

TEST(AdamClass, GroupsGetTheirOwnRate) {
    std::vector<NamedTensor<double>> a{param("a", {0.0})}, b{param("b", {0.0})};
    Adam<double> opt("test", {{a, 0.1}, {b, 0.01}}, 0.0);
    set_grad(a[0], {1.0});
    set_grad(b[0], {1.0});
    opt.step();
    EXPECT_NEAR(a[0].tensor.at(0), -0.1, 1e-8);
    EXPECT_NEAR(b[0].tensor.at(0), -0.01, 1e-9);
    EXPECT_EQ(opt.params().size(), 2u);
}

TEST(AdamClass, StepDecay) {
    std::vector<NamedTensor<double>> a{param("a", {0.0})};
    Adam<double> opt("test", {{a, 1e-3}}, 1e-4);
    EXPECT_EQ(opt.current_lr(), 1e-3);
    for (int i = 0; i < 10000; ++i) {
        opt.zero_grad();
        opt.step();
    }
    EXPECT_DOUBLE_EQ(opt.current_lr(), 5e-4);
}

TEST(AdamClass, EpochDecay) {
    std::vector<NamedTensor<double>> a{param("a", {0.0})};
    Adam<double> opt("test", {{a, 1e-3}}, 0.5, DecayMode::epoch);
    opt.step();
    opt.step();
    EXPECT_EQ(opt.current_lr(), 1e-3);
    opt.set_epoch(2);
    EXPECT_DOUBLE_EQ(opt.current_lr(), 5e-4);
}

TEST(AdamClass, ZeroGradAndNaming) {
    std::vector<NamedTensor<double>> a{param("a", {0.0})};
    Adam<double> opt("disc", {{a, 1e-3}}, 0.0);
    set_grad(a[0], {std::nan("")});
    try {
        opt.step();
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("disc"), std::string::npos);
    }
    opt.zero_grad();
    EXPECT_EQ(a[0].tensor.grad()[0], 0.0);
    EXPECT_THROW(Adam<double>("x", {{a, -1.0}}, 0.0), ConfigError);
}
