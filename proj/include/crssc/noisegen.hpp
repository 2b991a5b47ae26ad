// ============================================================================
// noisegen.hpp - synthetic noisy datasets with known provenance
//
// K task classes plus some irrelevant classes, each a spherical cluster:
// samples sit at a uniformly drawn radius from the class center along a
// uniformly random direction. Easy samples sit within 1 sigma of their
// center, hard ones in the 2-3 sigma band. A fraction tau of task samples get
// a uniformly random different label; irrelevant samples get a uniformly
// random task label.
// ============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "crssc/csv.hpp"
#include "crssc/selection.hpp"

namespace crssc {

enum class ProvenanceKind : int { Clean = 0, Mislabeled = 1, Irrelevant = 2 };

struct Provenance {
    ProvenanceKind kind = ProvenanceKind::Clean;
    // Ground-truth task class for Mislabeled; equals the observed label otherwise.
    std::size_t true_label = 0;

    static Provenance clean(std::size_t label) { return {ProvenanceKind::Clean, label}; }
    static Provenance mislabeled(std::size_t truth) { return {ProvenanceKind::Mislabeled, truth}; }
    static Provenance irrelevant(std::size_t observed) { return {ProvenanceKind::Irrelevant, observed}; }

    bool operator==(const Provenance&) const = default;
};

struct ProvenancedSample {
    SampleId id = 0;
    std::vector<double> features;
    std::size_t observed_label = 0;
    Provenance provenance;

    bool operator==(const ProvenancedSample&) const = default;
};

struct Dataset {
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;
    std::vector<ProvenancedSample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    bool operator==(const Dataset&) const = default;
};

struct NoiseConfig {
    std::size_t num_classes = 10;
    std::size_t n_irrelevant_classes = 2;
    double corruption_rate = 0.2;
    std::size_t samples_per_class = 200;
    std::size_t test_per_class = 100;
    std::size_t feature_dim = 16;
    double cluster_spread = 1.0;
    double hard_fraction = 0.2;
    // Half-width of the cube centers are drawn from, in units of
    // cluster_spread. <= 0 sizes the cube automatically and grows it until
    // placement succeeds.
    double center_box = 0.0;
    std::uint64_t seed = 0;
};

inline constexpr double kMinCenterSeparation = 4.0;  // in units of sigma

inline void validate(const NoiseConfig& c) {
    if (c.num_classes < 2) throw std::invalid_argument("K: need at least 2 task classes");
    if (!(c.corruption_rate >= 0.0 && c.corruption_rate < 1.0))
        throw std::invalid_argument("tau: must be in [0,1)");
    if (c.samples_per_class == 0) throw std::invalid_argument("samples_per_class: must be positive");
    if (c.feature_dim == 0) throw std::invalid_argument("feature_dim: must be positive");
    if (!(c.cluster_spread > 0.0) || !std::isfinite(c.cluster_spread))
        throw std::invalid_argument("cluster_spread: must be positive");
    if (!(c.hard_fraction >= 0.0 && c.hard_fraction < 1.0))
        throw std::invalid_argument("hard_fraction: must be in [0,1)");
    if (!std::isfinite(c.center_box)) throw std::invalid_argument("center_box: must be finite");
}

struct GeneratedData {
    Dataset train;
    Dataset test;
    std::vector<std::vector<double>> centers;  // task classes first, then irrelevant
};

namespace detail {

inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline std::vector<std::vector<double>> place_centers(const NoiseConfig& c, std::mt19937_64& rng) {
    const std::size_t n = c.num_classes + c.n_irrelevant_classes;
    const double sigma = c.cluster_spread;
    const double min_dist = kMinCenterSeparation * sigma;
    const bool automatic = c.center_box <= 0.0;
    // Automatic size: typical pairwise distance of about 5 sigma.
    double half = automatic ? 2.5 * sigma * std::sqrt(6.0 / static_cast<double>(c.feature_dim))
                            : c.center_box * sigma;
    constexpr int kAttemptsPerBox = 2000;
    constexpr int kMaxGrowths = 200;

    for (int growth = 0; growth <= (automatic ? kMaxGrowths : 0); ++growth) {
        std::uniform_real_distribution<double> coord(-half, half);
        std::vector<std::vector<double>> centers;
        int attempts = 0;
        while (centers.size() < n && attempts < kAttemptsPerBox) {
            ++attempts;
            std::vector<double> cand(c.feature_dim);
            for (double& v : cand) v = coord(rng);
            bool ok = std::all_of(centers.begin(), centers.end(),
                                  [&](const auto& other) { return distance(cand, other) >= min_dist; });
            if (ok) centers.push_back(std::move(cand));
        }
        if (centers.size() == n) return centers;
        half *= 1.1;
    }
    throw std::runtime_error("noisegen: could not place " + std::to_string(n) +
                             " centers at pairwise distance >= 4 sigma");
}

// Uniform over the volume of the shell lo <= |x - center| <= hi.
inline std::vector<double> draw_point(const std::vector<double>& center, double lo, double hi,
                                      std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> dir(center.size());
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& v : dir) {
            v = gauss(rng);
            norm += v * v;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    const double d = static_cast<double>(center.size());
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double lo_d = std::pow(lo, d);
    const double radius = std::pow(lo_d + u * (std::pow(hi, d) - lo_d), 1.0 / d);
    std::vector<double> p(center);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += radius * dir[i] / norm;
    return p;
}

inline std::size_t other_label(std::size_t label, std::size_t k, std::mt19937_64& rng) {
    const std::size_t r = std::uniform_int_distribution<std::size_t>(0, k - 2)(rng);
    return r >= label ? r + 1 : r;
}

inline std::vector<ProvenancedSample> draw_class(const std::vector<double>& center, std::size_t label,
                                                 std::size_t count, double hard_fraction, double sigma,
                                                 std::mt19937_64& rng) {
    const auto n_hard = static_cast<std::size_t>(std::llround(hard_fraction * static_cast<double>(count)));
    std::vector<ProvenancedSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const bool hard = i < n_hard;
        ProvenancedSample s;
        s.features = hard ? draw_point(center, 2.0 * sigma, 3.0 * sigma, rng) : draw_point(center, 0.0, sigma, rng);
        s.observed_label = label;
        s.provenance = Provenance::clean(label);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace detail

inline GeneratedData generate(const NoiseConfig& c) {
    validate(c);
    std::mt19937_64 rng(c.seed);
    GeneratedData g;
    g.centers = detail::place_centers(c, rng);
    const double sigma = c.cluster_spread;
    const std::size_t k = c.num_classes;

    std::vector<ProvenancedSample> task;
    for (std::size_t cls = 0; cls < k; ++cls) {
        auto part = detail::draw_class(g.centers[cls], cls, c.samples_per_class, c.hard_fraction, sigma, rng);
        task.insert(task.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }

    const auto n_corrupt =
        static_cast<std::size_t>(std::llround(c.corruption_rate * static_cast<double>(task.size())));
    std::vector<std::size_t> order(task.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < n_corrupt; ++i) {
        ProvenancedSample& s = task[order[i]];
        const std::size_t truth = s.observed_label;
        s.observed_label = detail::other_label(truth, k, rng);
        s.provenance = Provenance::mislabeled(truth);
    }

    std::vector<ProvenancedSample> all = std::move(task);
    std::uniform_int_distribution<std::size_t> any_label(0, k - 1);
    for (std::size_t extra = 0; extra < c.n_irrelevant_classes; ++extra) {
        for (std::size_t i = 0; i < c.samples_per_class; ++i) {
            ProvenancedSample s;
            s.features = detail::draw_point(g.centers[k + extra], 0.0, sigma, rng);
            s.observed_label = any_label(rng);
            s.provenance = Provenance::irrelevant(s.observed_label);
            all.push_back(std::move(s));
        }
    }
    std::shuffle(all.begin(), all.end(), rng);
    for (std::size_t i = 0; i < all.size(); ++i) all[i].id = i;
    g.train = Dataset{k, c.feature_dim, std::move(all)};

    std::vector<ProvenancedSample> test;
    for (std::size_t cls = 0; cls < k; ++cls) {
        auto part = detail::draw_class(g.centers[cls], cls, c.test_per_class, c.hard_fraction, sigma, rng);
        test.insert(test.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    std::shuffle(test.begin(), test.end(), rng);
    for (std::size_t i = 0; i < test.size(); ++i) test[i].id = i;
    g.test = Dataset{k, c.feature_dim, std::move(test)};
    return g;
}

// ---------------------------------------------------------------------------
// CSV: id,label,provenance,true_label,f0..f{d-1}
// provenance: 0 = clean, 1 = mislabeled, 2 = irrelevant.
// ---------------------------------------------------------------------------

inline void write_dataset_csv(std::ostream& os, const Dataset& ds) {
    os << "id,label,provenance,true_label";
    for (std::size_t f = 0; f < ds.feature_dim; ++f) os << ",f" << f;
    os << '\n';
    for (const auto& s : ds.samples) {
        os << s.id << ',' << s.observed_label << ',' << static_cast<int>(s.provenance.kind) << ','
           << s.provenance.true_label;
        for (double v : s.features) os << ',' << csv::format_double(v);
        os << '\n';
    }
}

// num_classes == 0 infers K from the largest label seen.
inline Dataset read_dataset_csv(std::istream& is, std::size_t num_classes = 0) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("dataset: missing header row");
    const auto header = csv::split(line);
    if (header.size() < 5 || header[0] != "id" || header[1] != "label" || header[2] != "provenance" ||
        header[3] != "true_label")
        throw std::invalid_argument("dataset: header must start with id,label,provenance,true_label,f0");
    Dataset ds;
    ds.feature_dim = header.size() - 4;
    std::size_t max_label = 0;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto fields = csv::split(line);
        const std::string where = "dataset row " + std::to_string(row);
        if (fields.size() != header.size()) throw std::invalid_argument(where + ": wrong number of fields");
        ProvenancedSample s;
        s.id = csv::parse_number<SampleId>(fields[0], where + " id");
        s.observed_label = csv::parse_number<std::size_t>(fields[1], where + " label");
        const int tag = csv::parse_number<int>(fields[2], where + " provenance");
        if (tag < 0 || tag > 2) throw std::invalid_argument(where + ": provenance must be 0, 1 or 2");
        s.provenance.kind = static_cast<ProvenanceKind>(tag);
        s.provenance.true_label = csv::parse_number<std::size_t>(fields[3], where + " true_label");
        if (s.provenance.kind == ProvenanceKind::Mislabeled && s.provenance.true_label == s.observed_label)
            throw std::invalid_argument(where + ": mislabeled sample with true_label == label");
        if (s.provenance.kind != ProvenanceKind::Mislabeled && s.provenance.true_label != s.observed_label)
            throw std::invalid_argument(where + ": true_label must equal label unless mislabeled");
        for (std::size_t f = 4; f < fields.size(); ++f) {
            const double v = csv::parse_number<double>(fields[f], where + " feature");
            if (!std::isfinite(v)) throw std::invalid_argument(where + ": non-finite feature");
            s.features.push_back(v);
        }
        max_label = std::max({max_label, s.observed_label, s.provenance.true_label});
        ds.samples.push_back(std::move(s));
    }
    ds.num_classes = num_classes == 0 ? max_label + 1 : num_classes;
    std::vector<SampleId> ids;
    for (const auto& s : ds.samples) {
        if (s.observed_label >= ds.num_classes || s.provenance.true_label >= ds.num_classes)
            throw std::invalid_argument("dataset: label outside [0,K)");
        ids.push_back(s.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw std::invalid_argument("dataset: duplicate sample id");
    return ds;
}

}  // namespace crssc
