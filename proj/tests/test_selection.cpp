#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "crssc/selection.hpp"

using namespace crssc;

namespace {

std::vector<SampleId> iota_ids(std::size_t n) {
    std::vector<SampleId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = 100 + i;
    return ids;
}

// Written independently of the library: plain loops, long double sums.
BatchPartition brute_partition(const std::vector<SampleId>& ids, const std::vector<double>& loss,
                               const std::vector<double>& cert) {
    const std::size_t n = ids.size();
    long double ls = 0;
    for (double l : loss) ls += l;
    const double lt = static_cast<double>(ls / n);
    BatchPartition p;
    p.loss_threshold = lt;
    long double cs = 0;
    std::size_t ce = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (loss[i] < lt) { cs += cert[i]; ++ce; }
    if (ce == 0) {
        p.certainty_fallback = true;
        cs = 0;
        for (double c : cert) cs += c;
        ce = n;
    }
    const double ct = static_cast<double>(cs / ce);
    p.certainty_threshold = ct;
    for (std::size_t i = 0; i < n; ++i) {
        if (loss[i] < lt) p.easy_ids.push_back(ids[i]);
        else if (cert[i] >= ct) p.reusable_ids.push_back(ids[i]);
        else p.dropped_ids.push_back(ids[i]);
    }
    return p;
}

}  // namespace

TEST(Certainty, UniformIsZero) {
    EXPECT_NEAR(certainty(Prediction{{0.25, 0.25, 0.25, 0.25}}), 0.0, 1e-15);
}

TEST(Certainty, TwoClassExample) {
    EXPECT_NEAR(certainty(Prediction{{0.75, 0.25}}), 0.25, 1e-12);
}

TEST(Certainty, OneHotReachesMaximum) {
    EXPECT_NEAR(certainty(Prediction{{0.0, 0.0, 1.0, 0.0}}), std::sqrt(3.0) / 4.0, 1e-12);
    EXPECT_NEAR(max_certainty(4), std::sqrt(3.0) / 4.0, 1e-15);
}

TEST(Certainty, BoundedForRandomDistributions) {
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> e(1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 2 + rng() % 15;
        std::vector<double> p(k);
        double s = 0;
        for (double& v : p) s += (v = e(rng));
        for (double& v : p) v /= s;
        const double c = certainty(Prediction{p});
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, max_certainty(k) + 1e-12);
    }
}

TEST(PartitionEasy, StrictlyBelowMean) {
    const std::vector<IdValue> b{{1, 0.2}, {2, 0.4}, {3, 1.0}, {4, 2.4}};
    const EasySplit s = partition_easy(b);
    EXPECT_DOUBLE_EQ(s.loss_threshold, 1.0);
    EXPECT_EQ(s.easy_ids, (std::vector<SampleId>{1, 2}));
    EXPECT_EQ(s.rest_ids, (std::vector<SampleId>{3, 4}));
}

TEST(PartitionEasy, AllEqualLossesAreAllHigh) {
    const std::vector<IdValue> b{{1, 0.5}, {2, 0.5}, {3, 0.5}};
    const EasySplit s = partition_easy(b);
    EXPECT_TRUE(s.easy_ids.empty());
    EXPECT_EQ(s.rest_ids.size(), 3u);
}

TEST(PartitionEasy, SingleSampleIsHigh) {
    const std::vector<IdValue> b{{9, 0.1}};
    EXPECT_EQ(partition_easy(b).rest_ids, (std::vector<SampleId>{9}));
}

TEST(PartitionEasy, RejectsEmptyAndNonFinite) {
    EXPECT_THROW(partition_easy({}), std::invalid_argument);
    const std::vector<IdValue> b{{1, 0.2}, {2, std::nan("")}};
    EXPECT_THROW(partition_easy(b), std::invalid_argument);
}

TEST(SelectReusable, ThresholdIsInclusive) {
    const std::vector<IdValue> rest{{5, 0.3}, {6, 0.1}, {7, 0.2}};
    const std::vector<double> easy{0.2, 0.2};
    const ReuseSplit r = select_reusable(rest, easy, easy);
    EXPECT_DOUBLE_EQ(r.certainty_threshold, 0.2);
    EXPECT_FALSE(r.fallback);
    EXPECT_EQ(r.reusable_ids, (std::vector<SampleId>{5, 7}));
    EXPECT_EQ(r.dropped_ids, (std::vector<SampleId>{6}));
}

TEST(SelectReusable, EqualToARoundedMeanIsReusable) {
    // 0.2 + 0.2 + 0.2 in double arithmetic is 0.6000000000000001.
    const std::vector<IdValue> rest{{4, 0.2}};
    const std::vector<double> easy{0.2, 0.2, 0.2};
    EXPECT_EQ(select_reusable(rest, easy, easy).reusable_ids, (std::vector<SampleId>{4}));
}

TEST(SelectReusable, EmptyEasySetFallsBackToBatchMean) {
    const std::vector<IdValue> rest{{1, 0.1}, {2, 0.3}};
    const std::vector<double> batch{0.1, 0.3};
    const ReuseSplit r = select_reusable(rest, {}, batch);
    EXPECT_TRUE(r.fallback);
    EXPECT_DOUBLE_EQ(r.certainty_threshold, 0.2);
    EXPECT_EQ(r.reusable_ids, (std::vector<SampleId>{2}));
    EXPECT_EQ(r.dropped_ids, (std::vector<SampleId>{1}));
}

TEST(PartitionBatch, WorkedExample) {
    // losses 0.1 0.2 0.9 1.0 -> mean 0.55; easy certainties 0.4 0.2 -> 0.3.
    const std::vector<SampleId> ids{10, 11, 12, 13};
    const std::vector<double> loss{0.1, 0.2, 0.9, 1.0};
    const std::vector<double> cert{0.4, 0.2, 0.35, 0.05};
    const BatchPartition p = partition_batch(ids, loss, cert);
    EXPECT_EQ(p.easy_ids, (std::vector<SampleId>{10, 11}));
    EXPECT_EQ(p.reusable_ids, (std::vector<SampleId>{12}));
    EXPECT_EQ(p.dropped_ids, (std::vector<SampleId>{13}));
    EXPECT_DOUBLE_EQ(p.loss_threshold, 0.55);
    EXPECT_NEAR(p.certainty_threshold, 0.3, 1e-15);
}

TEST(PartitionBatch, RejectsLengthMismatch) {
    const std::vector<SampleId> ids{1, 2};
    const std::vector<double> a{0.1, 0.2}, b{0.1};
    EXPECT_THROW(partition_batch(ids, a, b), std::invalid_argument);
}

TEST(PartitionBatch, MatchesBruteForceOracle) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::uniform_real_distribution<double> c(0.0, 0.3);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        const auto ids = iota_ids(n);
        std::vector<double> loss(n), cert(n);
        // Some trials use a coarse dyadic grid so exact ties with the mean happen.
        const bool coarse = trial % 4 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            loss[i] = coarse ? static_cast<double>(rng() % 3) : u(rng);
            cert[i] = coarse ? 0.125 * static_cast<double>(rng() % 3) : c(rng);
        }
        const BatchPartition got = partition_batch(ids, loss, cert);
        const BatchPartition want = brute_partition(ids, loss, cert);
        ASSERT_EQ(got.easy_ids, want.easy_ids) << "trial " << trial;
        ASSERT_EQ(got.reusable_ids, want.reusable_ids) << "trial " << trial;
        ASSERT_EQ(got.dropped_ids, want.dropped_ids) << "trial " << trial;
        ASSERT_EQ(got.certainty_fallback, want.certainty_fallback);
    }
}

TEST(PartitionBatch, GroupsAreDisjointAndCover) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 64;
        const auto ids = iota_ids(n);
        std::vector<double> loss(n), cert(n);
        for (std::size_t i = 0; i < n; ++i) {
            loss[i] = u(rng);
            cert[i] = u(rng);
        }
        const BatchPartition p = partition_batch(ids, loss, cert);
        std::multiset<SampleId> all(p.easy_ids.begin(), p.easy_ids.end());
        all.insert(p.reusable_ids.begin(), p.reusable_ids.end());
        all.insert(p.dropped_ids.begin(), p.dropped_ids.end());
        ASSERT_EQ(all, std::multiset<SampleId>(ids.begin(), ids.end()));
        // Some sample is at or above the mean, so the high-loss side is never empty.
        ASSERT_FALSE(p.reusable_ids.empty() && p.dropped_ids.empty());
    }
}

TEST(PartitionBatch, ScalingCertaintiesPreservesGroups) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 30;
        const auto ids = iota_ids(n);
        std::vector<double> loss(n), cert(n), scaled(n);
        for (std::size_t i = 0; i < n; ++i) {
            loss[i] = u(rng);
            cert[i] = 0.125 * static_cast<double>(rng() % 8);
            scaled[i] = cert[i] * 4.0;  // exact in binary
        }
        const BatchPartition a = partition_batch(ids, loss, cert);
        const BatchPartition b = partition_batch(ids, loss, scaled);
        ASSERT_EQ(a.reusable_ids, b.reusable_ids);
        ASSERT_EQ(a.dropped_ids, b.dropped_ids);
    }
}
