// Per-epoch training records shared by the trainer and the metrics.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "crssc/selection.hpp"

namespace crssc {

enum class Group : int { All = 0, Easy = 1, Reusable = 2, Dropped = 3 };

inline std::string_view to_string(Group g) {
    switch (g) {
        case Group::All: return "all";
        case Group::Easy: return "easy";
        case Group::Reusable: return "reusable";
        case Group::Dropped: return "dropped";
    }
    return "?";
}

struct SampleSnapshot {
    SampleId id = 0;
    double loss = 0.0;       // LSR cross-entropy against the observed label
    double certainty = 0.0;
    Group group = Group::All;
    std::int64_t label_used = -1;  // -1 when the sample contributed no gradient
    std::size_t predicted = 0;     // argmax at forward time

    bool operator==(const SampleSnapshot&) const = default;
};

struct LabelCorrection {
    SampleId id = 0;
    std::size_t old_label = 0;
    std::size_t new_label = 0;

    bool operator==(const LabelCorrection&) const = default;
};

// Training-set fit of the end-of-epoch model, by provenance.
struct FitRates {
    double clean = 0.0;                // predicted == observed label
    double mislabeled_observed = 0.0;  // predicted == corrupted label (memorization)
    double mislabeled_true = 0.0;      // predicted == true label
    double irrelevant_observed = 0.0;  // predicted == the random label assigned

    bool operator==(const FitRates&) const = default;
};

struct EpochLog {
    std::int64_t epoch = 0;
    bool selective = false;
    std::vector<BatchPartition> partitions;
    std::vector<SampleSnapshot> samples;
    std::vector<LabelCorrection> corrections;
    double mean_loss = 0.0;
    std::optional<double> test_accuracy;
    std::optional<FitRates> train_fit;
    std::size_t skipped_steps = 0;     // batches whose easy and reusable sets were both empty
    std::size_t fallback_batches = 0;  // batches that used the whole-batch certainty threshold

    bool operator==(const EpochLog&) const = default;

    std::vector<SampleId> ids_in(Group g) const {
        std::vector<SampleId> out;
        for (const auto& s : samples)
            if (s.group == g) out.push_back(s.id);
        return out;
    }
};

}  // namespace crssc
