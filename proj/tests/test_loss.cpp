#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "crssc/loss.hpp"

using namespace crssc;

TEST(LsrTarget, ThreeClassExample) {
    const SmoothedTarget t = lsr_target(0, 3, 0.1);
    ASSERT_EQ(t.dist.size(), 3u);
    EXPECT_DOUBLE_EQ(t.dist[0], 0.9);
    EXPECT_DOUBLE_EQ(t.dist[1], 0.05);
    EXPECT_DOUBLE_EQ(t.dist[2], 0.05);
}

TEST(LsrTarget, ZeroEpsilonIsOneHot) {
    const SmoothedTarget t = lsr_target(2, 4, 0.0);
    EXPECT_EQ(t.dist, (std::vector<double>{0.0, 0.0, 1.0, 0.0}));
}

TEST(LsrTarget, SumsToOneAndKeepsLabelOnTop) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> eps(0.0, 0.999);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t k = 2 + rng() % 20;
        const std::size_t label = rng() % k;
        const double e = eps(rng);
        const SmoothedTarget t = lsr_target(label, k, e);
        EXPECT_NEAR(std::accumulate(t.dist.begin(), t.dist.end(), 0.0), 1.0, 1e-12);
        for (std::size_t j = 0; j < k; ++j) {
            if (j == label) continue;
            EXPECT_DOUBLE_EQ(t.dist[j], e / static_cast<double>(k - 1));
            if (e < 1.0 - 1.0 / static_cast<double>(k)) {
                EXPECT_GT(t.dist[label], t.dist[j]);
            }
        }
    }
}

TEST(LsrTarget, RejectsBadArguments) {
    EXPECT_THROW(lsr_target(0, 1, 0.1), std::invalid_argument);
    EXPECT_THROW(lsr_target(3, 3, 0.1), std::invalid_argument);
    EXPECT_THROW(lsr_target(0, 3, 1.0), std::invalid_argument);
    EXPECT_THROW(lsr_target(0, 3, -0.1), std::invalid_argument);
    try {
        lsr_target(0, 3, 1.5);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
    }
}

TEST(LsrCrossEntropy, HandValue) {
    const Prediction p{{0.7, 0.2, 0.1}};
    EXPECT_NEAR(lsr_cross_entropy(p, 0, 0.1), 0.516608, 1e-6);
    EXPECT_NEAR(lsr_cross_entropy(p, 0, 0.0), -std::log(0.7), 1e-12);
}

TEST(LsrCrossEntropy, MinimisedAtTheTarget) {
    // Gibbs: CE(t, p) >= CE(t, t), equality only at p = t.
    const SmoothedTarget t = lsr_target(1, 4, 0.3);
    const double at_target = lsr_cross_entropy(Prediction{t.dist}, 1, 0.3);
    EXPECT_LT(at_target, lsr_cross_entropy(Prediction{{0.05, 0.8, 0.05, 0.1}}, 1, 0.3));
    EXPECT_LT(at_target, lsr_cross_entropy(Prediction{{0.0, 1.0, 0.0, 0.0}}, 1, 0.3));
}
