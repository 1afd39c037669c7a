#include <gtest/gtest.h>

#include "c4r/losses.hpp"
#include "c4r/rng.hpp"

using namespace c4r;

TEST(PcaLoss, ZeroOnEqualAttention) {
    Tensor a({2, 2}, {1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(loss_pca(a, a), 0.0);
}

TEST(PcaLoss, SumOfSquares) {
    Tensor t({2, 2}, {1, 0, 0, 1});
    Tensor s({2, 2}, {0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(loss_pca(t, s), 2.0);
}

TEST(PcaLoss, MatchesBruteForceOracle) {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor t({3, 2}), s({3, 2});
        for (double& v : t.data) v = rng.normal();
        for (double& v : s.data) v = rng.normal();
        double want = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            double d = t.data[i] - s.data[i];
            want += d * d;
        }
        EXPECT_NEAR(loss_pca(t, s), want, 1e-12);
    }
}

TEST(PcaLoss, GradIsTwiceTheResidual) {
    Tensor t({1, 2}, {1.0, -1.0});
    Tensor s({1, 2}, {2.5, 0.0});
    Tensor g = loss_pca_grad(t, s);
    EXPECT_DOUBLE_EQ(g.data[0], 3.0);
    EXPECT_DOUBLE_EQ(g.data[1], 2.0);
    EXPECT_THROW(loss_pca_grad(t, Tensor({2, 1})), Error);
}

TEST(GlLoss, PerfectAlignment) {
    EXPECT_DOUBLE_EQ(loss_gl({1, 0}, {1, 0}), 0.0);
}

TEST(GlLoss, Orthogonal) {
    EXPECT_DOUBLE_EQ(loss_gl({1, 0}, {0, 1}), 1.0);
}

TEST(GlLoss, ScaleInvariance) {
    EXPECT_DOUBLE_EQ(loss_gl({3, 4}, {6, 8}), 0.0);
}

TEST(GlLoss, AntiparallelIsTwo) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Vec h(4);
        for (double& v : h) v = rng.normal();
        Vec neg(4);
        for (std::size_t i = 0; i < 4; ++i) neg[i] = -h[i];
        EXPECT_NEAR(loss_gl(h, h), 0.0, 1e-12);
        EXPECT_NEAR(loss_gl(h, neg), 2.0, 1e-12);
    }
}

TEST(GlLoss, ZeroNormRejected) {
    EXPECT_THROW(loss_gl({0, 0}, {1, 0}), Error);
    EXPECT_THROW(loss_gl_grad({1, 0}, {0, 0}), Error);
}

TEST(GlLoss, GradMatchesFiniteDifferences) {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        Vec t(5), s(5);
        for (double& v : t) v = rng.normal();
        for (double& v : s) v = rng.normal();
        Vec g = loss_gl_grad(t, s);
        for (std::size_t i = 0; i < 5; ++i) {
            const double h = 1e-6;
            Vec up = s, down = s;
            up[i] += h;
            down[i] -= h;
            double fd = (loss_gl(t, up) - loss_gl(t, down)) / (2 * h);
            EXPECT_NEAR(g[i], fd, 1e-7);
        }
    }
}

TEST(DiscLoss, PerfectDiscriminatorNearZero) {
    EXPECT_NEAR(loss_disc(1.0 - kProbEps, kProbEps), 0.0, 1e-6);
}

TEST(DiscLoss, ChanceLevelIsTwoLogTwo) {
    EXPECT_NEAR(loss_disc(0.5, 0.5), 2.0 * std::log(2.0), 1e-12);
}

TEST(DiscLoss, HandComputedNinetyPercent) {
    // -log 0.9 - log 0.9 = -2 ln 0.9
    EXPECT_NEAR(loss_disc(0.9, 0.1), 0.21072103, 1e-8);
}

TEST(DiscLoss, SaturatedInputsClampedFinite) {
    EXPECT_TRUE(std::isfinite(loss_disc(0.0, 1.0)));
    EXPECT_TRUE(std::isfinite(loss_disc_grad_real(0.0)));
    EXPECT_TRUE(std::isfinite(loss_disc_grad_fake(1.0)));
}

TEST(AdvLoss, FooledDiscriminatorNearZero) {
    EXPECT_NEAR(loss_adv_student(1.0 - kProbEps), 0.0, 1e-6);
}

TEST(AdvLoss, HalfIsLogTwo) {
    EXPECT_NEAR(loss_adv_student(0.5), std::log(2.0), 1e-12);
}

TEST(AdvLoss, QuarterIsTwoLogTwo) {
    EXPECT_NEAR(loss_adv_student(0.25), 1.3862944, 1e-7);
}

TEST(TotalLoss, HandArithmetic) {
    EXPECT_DOUBLE_EQ(loss_total(1.0, 0.5, 2.0, 0.1), 1.7);
}

TEST(TotalLoss, LambdaZeroDisablesAdversarial) {
    EXPECT_DOUBLE_EQ(loss_total(0.7, 0.3, 123.0, 0.0), 1.0);
}

TEST(TotalLoss, PureAdversarialPassthrough) {
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        double x = rng.uniform(0.0, 10.0);
        EXPECT_DOUBLE_EQ(loss_total(0.0, 0.0, x, 1.0), x);
    }
}

TEST(TotalLoss, LinearInEachArgument) {
    EXPECT_DOUBLE_EQ(loss_total(2.0, 3.0, 4.0, 0.5) - loss_total(1.0, 3.0, 4.0, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(loss_total(1.0, 4.0, 4.0, 0.5) - loss_total(1.0, 3.0, 4.0, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(loss_total(1.0, 3.0, 6.0, 0.5) - loss_total(1.0, 3.0, 4.0, 0.5), 1.0);
}

TEST(TotalLoss, NegativeLambdaRejected) {
    EXPECT_THROW(loss_total(1.0, 1.0, 1.0, -0.1), Error);
}

TEST(Breakdown, TotalFieldConsistent) {
    LossBreakdown b = make_breakdown(1.0, 0.5, 2.0, 0.3, 0.1);
    EXPECT_DOUBLE_EQ(b.total, b.pca + b.gl + b.lambda * b.adv_student);
    EXPECT_DOUBLE_EQ(b.disc, 0.3);
}
