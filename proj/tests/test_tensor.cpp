#include <gtest/gtest.h>

#include "riftlab/tensor.hpp"

using namespace riftlab;

TEST(L2Norm, ThreeFourFive) {
    Tensor t({2}, {3.0, 4.0});
    EXPECT_DOUBLE_EQ(l2_norm(t), 5.0);
}

TEST(L2Norm, AllZeros) {
    Tensor t({4});
    EXPECT_DOUBLE_EQ(l2_norm(t), 0.0);
}

TEST(L2Norm, MatchesNaiveSummation) {
    Rng rng(7);
    Tensor t({10});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-3.0, 3.0);
    // independent oracle: plain accumulation loop
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] * t[i];
    double expected = std::sqrt(acc);
    EXPECT_NEAR(l2_norm(t), expected, 1e-12);
}

TEST(L2Norm, EmptyTensorThrows) {
    Tensor t;
    EXPECT_THROW(l2_norm(t), std::invalid_argument);
}

TEST(ProjectL2Ball, OnBoundaryUnchanged) {
    Tensor t({2}, {3.0, 4.0});
    Tensor p = project_l2_ball(t, 5.0);
    EXPECT_TRUE(bitwise_equal(p, t));
}

TEST(ProjectL2Ball, RescalesOutside) {
    Tensor t({2}, {3.0, 4.0});
    Tensor p = project_l2_ball(t, 2.5);
    EXPECT_DOUBLE_EQ(p[0], 1.5);
    EXPECT_DOUBLE_EQ(p[1], 2.0);
}

TEST(ProjectL2Ball, ZeroStaysZero) {
    Tensor t({2}, {0.0, 0.0});
    Tensor p = project_l2_ball(t, 1.0);
    EXPECT_TRUE(bitwise_equal(p, t));
}

TEST(ProjectL2Ball, NegativeRadiusThrows) {
    Tensor t({2}, {1.0, 1.0});
    EXPECT_THROW(project_l2_ball(t, -1.0), std::invalid_argument);
}

TEST(ProjectL2Ball, IdempotentBitwise) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + rng.next_index(8);
        Tensor t({n});
        for (std::size_t i = 0; i < n; ++i) t[i] = rng.uniform(-10.0, 10.0);
        double radius = rng.uniform(0.0, 5.0);
        Tensor once = project_l2_ball(t, radius);
        Tensor twice = project_l2_ball(once, radius);
        EXPECT_TRUE(bitwise_equal(once, twice));
    }
}

TEST(ProjectL2Ball, NormWithinRadius) {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + rng.next_index(8);
        Tensor t({n});
        for (std::size_t i = 0; i < n; ++i) t[i] = rng.uniform(-10.0, 10.0);
        double radius = rng.uniform(0.0, 5.0);
        EXPECT_LE(l2_norm(project_l2_ball(t, radius)), radius + 1e-9);
    }
}

TEST(Clamp, BasicExample) {
    Tensor t({3}, {-0.1, 0.5, 1.3});
    Tensor c = clamp(t, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(c[0], 0.0);
    EXPECT_DOUBLE_EQ(c[1], 0.5);
    EXPECT_DOUBLE_EQ(c[2], 1.0);
}

TEST(Clamp, InRangeUnchanged) {
    Tensor t({3}, {0.2, 0.5, 0.9});
    EXPECT_TRUE(bitwise_equal(clamp(t, 0.0, 1.0), t));
}

TEST(Clamp, DegenerateInterval) {
    Tensor t({2}, {2.0, 2.0});
    Tensor c = clamp(t, 2.0, 2.0);
    EXPECT_TRUE(bitwise_equal(c, t));
}

TEST(Clamp, InvertedBoundsThrow) {
    Tensor t({1}, {0.0});
    EXPECT_THROW(clamp(t, 1.0, 0.0), std::invalid_argument);
}

TEST(Axpy, ZeroCoefficientGivesY) {
    Tensor x({3}, {1.0, 2.0, 3.0});
    Tensor y({3}, {4.0, 5.0, 6.0});
    Tensor r = axpy(0.0, x, y);
    EXPECT_EQ(r, y);
}

TEST(Axpy, IdentityOnZeros) {
    Tensor x({3}, {1.0, 2.0, 3.0});
    Tensor zeros({3});
    EXPECT_EQ(axpy(1.0, x, zeros), x);
}

TEST(Axpy, MinusOneCancels) {
    Tensor x({3}, {1.5, -2.0, 0.25});
    Tensor r = axpy(-1.0, x, x);
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_DOUBLE_EQ(r[i], 0.0);
}

TEST(Axpy, ShapeMismatchThrows) {
    Tensor x({2}, {1.0, 2.0});
    Tensor y({3}, {1.0, 2.0, 3.0});
    EXPECT_THROW(axpy(1.0, x, y), std::invalid_argument);
}

TEST(Rng, SameSeedSameSequence) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, SameSeedSameDoublesBitwise) {
    Rng a(9001), b(9001);
    for (int i = 0; i < 1000; ++i) {
        double x = a.next_double(), y = b.next_double();
        EXPECT_EQ(std::memcmp(&x, &y, sizeof(double)), 0);
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
}

TEST(Rng, NormalDrawsAreFinite) {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) EXPECT_TRUE(std::isfinite(rng.normal()));
}

TEST(Rng, MixSeparatesStreams) {
    EXPECT_NE(Rng::mix(1, 2), Rng::mix(2, 1));
    EXPECT_NE(Rng::mix(1, 2), Rng::mix(1, 3));
}
