// ============================================================================
// selection.hpp - per-mini-batch drop / reuse partition
//
// Stage 1 splits the batch at its mean loss (strictly below -> easy).
// Stage 2 keeps high-loss samples whose prediction certainty reaches the
// mean certainty of the easy set (inclusive) and drops the rest.
// ============================================================================
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "crssc/classifier.hpp"

namespace crssc {

using SampleId = std::uint64_t;

struct IdValue {
    SampleId id;
    double value;
};

struct BatchPartition {
    std::vector<SampleId> easy_ids;
    std::vector<SampleId> reusable_ids;
    std::vector<SampleId> dropped_ids;
    double certainty_threshold = 0.0;
    double loss_threshold = 0.0;
    // Set when the easy set was empty and the whole-batch mean certainty was used.
    bool certainty_fallback = false;

    bool operator==(const BatchPartition&) const = default;
};

struct EasySplit {
    std::vector<SampleId> easy_ids;
    std::vector<SampleId> rest_ids;
    double loss_threshold = 0.0;
};

struct ReuseSplit {
    std::vector<SampleId> reusable_ids;
    std::vector<SampleId> dropped_ids;
    double certainty_threshold = 0.0;
    bool fallback = false;
};

// Standard deviation of the probability vector:
// sqrt(max(0, mean(p^2) - 1/K^2)). Range [0, sqrt(K-1)/K].
inline double certainty(const Prediction& pred) {
    const std::size_t k = pred.num_classes();
    if (k == 0) throw std::invalid_argument("certainty: empty prediction");
    const double kk = static_cast<double>(k);
    double sq = 0.0;
    for (double p : pred.probs) sq += p * p;
    return std::sqrt(std::max(0.0, sq / kk - 1.0 / (kk * kk)));
}

inline double max_certainty(std::size_t num_classes) {
    const double k = static_cast<double>(num_classes);
    return std::sqrt(k - 1.0) / k;
}

namespace detail {
// Extended-precision accumulation so a mean of equal values rounds back to
// that value and ties with the threshold resolve as the definitions intend.
inline double mean_of(std::span<const double> xs) {
    long double sum = 0.0L;
    for (double x : xs) sum += x;
    return static_cast<double>(sum / static_cast<long double>(xs.size()));
}
}  // namespace detail

inline EasySplit partition_easy(std::span<const IdValue> batch_losses) {
    if (batch_losses.empty()) throw std::invalid_argument("partition_easy: empty batch");
    std::vector<double> losses;
    losses.reserve(batch_losses.size());
    for (const auto& s : batch_losses) {
        if (!std::isfinite(s.value)) throw std::invalid_argument("partition_easy: non-finite loss");
        losses.push_back(s.value);
    }
    EasySplit out;
    out.loss_threshold = detail::mean_of(losses);
    for (const auto& s : batch_losses)
        (s.value < out.loss_threshold ? out.easy_ids : out.rest_ids).push_back(s.id);
    return out;
}

inline ReuseSplit select_reusable(std::span<const IdValue> rest_certainties,
                                  std::span<const double> easy_certainties,
                                  std::span<const double> batch_certainties) {
    ReuseSplit out;
    if (!easy_certainties.empty()) {
        out.certainty_threshold = detail::mean_of(easy_certainties);
    } else {
        out.fallback = true;
        out.certainty_threshold = batch_certainties.empty() ? 0.0 : detail::mean_of(batch_certainties);
    }
    for (const auto& s : rest_certainties)
        (s.value >= out.certainty_threshold ? out.reusable_ids : out.dropped_ids).push_back(s.id);
    return out;
}

// Both stages on one batch. `losses` and `certainties` are parallel to `ids`.
inline BatchPartition partition_batch(std::span<const SampleId> ids, std::span<const double> losses,
                                      std::span<const double> certainties) {
    if (ids.size() != losses.size() || ids.size() != certainties.size())
        throw std::invalid_argument("partition_batch: ids, losses and certainties differ in length");
    std::vector<IdValue> by_loss;
    by_loss.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) by_loss.push_back({ids[i], losses[i]});
    EasySplit easy = partition_easy(by_loss);

    std::vector<double> easy_cert;
    std::vector<IdValue> rest;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (losses[i] < easy.loss_threshold)
            easy_cert.push_back(certainties[i]);
        else
            rest.push_back({ids[i], certainties[i]});
    }
    ReuseSplit reuse = select_reusable(rest, easy_cert, certainties);

    BatchPartition p;
    p.easy_ids = std::move(easy.easy_ids);
    p.reusable_ids = std::move(reuse.reusable_ids);
    p.dropped_ids = std::move(reuse.dropped_ids);
    p.loss_threshold = easy.loss_threshold;
    p.certainty_threshold = reuse.certainty_threshold;
    p.certainty_fallback = reuse.fallback;
    return p;
}

}  // namespace crssc
