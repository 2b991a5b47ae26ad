#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "crssc/noisegen.hpp"

using namespace crssc;

namespace {

NoiseConfig small_config(std::uint64_t seed = 1) {
    NoiseConfig c;
    c.num_classes = 10;
    c.n_irrelevant_classes = 2;
    c.corruption_rate = 0.2;
    c.samples_per_class = 200;
    c.test_per_class = 20;
    c.feature_dim = 16;
    c.seed = seed;
    return c;
}

std::size_t count_kind(const Dataset& ds, ProvenanceKind k) {
    std::size_t n = 0;
    for (const auto& s : ds.samples) n += s.provenance.kind == k;
    return n;
}

}  // namespace

TEST(Noisegen, CompositionFractions) {
    const GeneratedData g = generate(small_config());
    const Dataset& ds = g.train;
    ASSERT_EQ(ds.size(), 2400u);
    EXPECT_NEAR(count_kind(ds, ProvenanceKind::Irrelevant) / 2400.0, 0.1667, 1e-4);
    EXPECT_NEAR(count_kind(ds, ProvenanceKind::Mislabeled) / 2400.0, 0.1667, 1e-4);
    EXPECT_EQ(count_kind(ds, ProvenanceKind::Clean), 1600u);
    EXPECT_EQ(g.test.size(), 200u);
    EXPECT_EQ(count_kind(g.test, ProvenanceKind::Clean), 200u);
}

TEST(Noisegen, ExactCorruptionCount) {
    for (double tau : {0.0, 0.05, 0.33, 0.5}) {
        NoiseConfig c = small_config();
        c.corruption_rate = tau;
        c.n_irrelevant_classes = 0;
        const Dataset ds = generate(c).train;
        EXPECT_EQ(count_kind(ds, ProvenanceKind::Mislabeled), static_cast<std::size_t>(std::llround(tau * 2000)));
    }
}

TEST(Noisegen, IdsAreDenseAndLabelsConsistent) {
    const Dataset ds = generate(small_config()).train;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& s = ds.samples[i];
        EXPECT_EQ(s.id, i);
        EXPECT_EQ(s.features.size(), 16u);
        EXPECT_LT(s.observed_label, 10u);
        if (s.provenance.kind == ProvenanceKind::Mislabeled)
            EXPECT_NE(s.observed_label, s.provenance.true_label);
        else
            EXPECT_EQ(s.observed_label, s.provenance.true_label);
    }
}

TEST(Noisegen, CorruptedLabelsSpreadOverOtherClasses) {
    NoiseConfig c = small_config(3);
    c.corruption_rate = 0.5;
    c.samples_per_class = 900;
    c.num_classes = 4;
    const Dataset ds = generate(c).train;
    // Offsets (observed - truth) mod K should be close to uniform over 1..K-1.
    std::map<std::size_t, std::size_t> offsets;
    std::size_t n = 0;
    for (const auto& s : ds.samples)
        if (s.provenance.kind == ProvenanceKind::Mislabeled) {
            ++offsets[(s.observed_label + 4 - s.provenance.true_label) % 4];
            ++n;
        }
    ASSERT_EQ(offsets.count(0), 0u);
    for (std::size_t o = 1; o < 4; ++o) EXPECT_NEAR(offsets[o] / static_cast<double>(n), 1.0 / 3.0, 0.04);
}

TEST(Noisegen, CentersAreSeparated) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        NoiseConfig c = small_config(seed);
        c.cluster_spread = 2.5;
        const GeneratedData g = generate(c);
        ASSERT_EQ(g.centers.size(), 12u);
        for (std::size_t a = 0; a < g.centers.size(); ++a)
            for (std::size_t b = a + 1; b < g.centers.size(); ++b)
                EXPECT_GE(detail::distance(g.centers[a], g.centers[b]), 4.0 * 2.5);
    }
}

TEST(Noisegen, EasyAndHardRadii) {
    NoiseConfig c = small_config(4);
    c.cluster_spread = 1.5;
    const GeneratedData g = generate(c);
    const double sigma = 1.5;
    std::vector<std::size_t> hard(10, 0);
    for (const auto& s : g.train.samples) {
        if (s.provenance.kind == ProvenanceKind::Irrelevant) {
            const double r = std::min(detail::distance(s.features, g.centers[10]),
                                      detail::distance(s.features, g.centers[11]));
            EXPECT_LE(r, sigma + 1e-9);
            continue;
        }
        const double r = detail::distance(s.features, g.centers[s.provenance.true_label]);
        if (r > sigma + 1e-9) {
            EXPECT_GE(r, 2.0 * sigma - 1e-9);
            EXPECT_LE(r, 3.0 * sigma + 1e-9);
            ++hard[s.provenance.true_label];
        }
    }
    for (std::size_t h : hard) EXPECT_EQ(h, 40u);
}

TEST(Noisegen, SameSeedSameData) {
    EXPECT_EQ(generate(small_config(9)).train, generate(small_config(9)).train);
    EXPECT_FALSE(generate(small_config(9)).train == generate(small_config(10)).train);
}

TEST(Noisegen, TooSmallExplicitBoxFails) {
    NoiseConfig c = small_config();
    c.center_box = 0.5;
    EXPECT_THROW(generate(c), std::runtime_error);
}

TEST(Noisegen, ValidationNamesTheKey) {
    auto message = [](NoiseConfig c) {
        try {
            generate(c);
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    NoiseConfig c = small_config();
    c.corruption_rate = 1.0;
    EXPECT_EQ(message(c).rfind("tau", 0), 0u);
    c = small_config();
    c.num_classes = 1;
    EXPECT_EQ(message(c).rfind("K", 0), 0u);
    c = small_config();
    c.cluster_spread = 0.0;
    EXPECT_EQ(message(c).rfind("cluster_spread", 0), 0u);
}

TEST(DatasetCsv, RoundTripIsExact) {
    const Dataset ds = generate(small_config(2)).train;
    std::stringstream ss;
    write_dataset_csv(ss, ds);
    EXPECT_EQ(read_dataset_csv(ss, 10), ds);
}

TEST(DatasetCsv, InfersClassCount) {
    std::istringstream is("id,label,provenance,true_label,f0\n0,2,0,2,1.5\n1,0,1,3,-2\n");
    const Dataset ds = read_dataset_csv(is);
    EXPECT_EQ(ds.num_classes, 4u);
    EXPECT_EQ(ds.feature_dim, 1u);
    EXPECT_EQ(ds.samples[1].provenance, Provenance::mislabeled(3));
}

TEST(DatasetCsv, RejectsMalformedInput) {
    const char* bad[] = {
        "",
        "a,b,c\n",
        "id,label,provenance,true_label,f0\n0,1,0,1\n",
        "id,label,provenance,true_label,f0\n0,1,5,1,0.0\n",
        "id,label,provenance,true_label,f0\n0,1,1,1,0.0\n",
        "id,label,provenance,true_label,f0\n0,1,0,2,0.0\n",
        "id,label,provenance,true_label,f0\n0,1,0,1,nan\n",
        "id,label,provenance,true_label,f0\n0,1,0,1,x\n",
        "id,label,provenance,true_label,f0\n0,1,0,1,0\n0,1,0,1,0\n",
    };
    for (const char* text : bad) {
        std::istringstream is(text);
        EXPECT_THROW(read_dataset_csv(is), std::invalid_argument) << text;
    }
    std::istringstream is("id,label,provenance,true_label,f0\n0,5,0,5,0\n");
    EXPECT_THROW(read_dataset_csv(is, 3), std::invalid_argument);
}
