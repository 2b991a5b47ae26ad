// Walks a single mini-batch through the easy / reusable / dropped split.
#include <cstdio>
#include <vector>

#include "crssc/history.hpp"
#include "crssc/loss.hpp"
#include "crssc/selection.hpp"

int main() {
    using crssc::Prediction;
    // Five samples, three classes, light smoothing. Heavy smoothing targets
    // (epsilon near 0.5) score flat predictions as low-loss.
    const std::vector<std::size_t> labels{0, 1, 2, 0, 1};
    const std::vector<Prediction> preds{
        {{0.80, 0.10, 0.10}},  // confident and agrees
        {{0.15, 0.70, 0.15}},  // agrees
        {{0.85, 0.05, 0.10}},  // confident, disagrees: likely a flipped label
        {{0.34, 0.33, 0.33}},  // no idea
        {{0.30, 0.40, 0.30}},  // weakly agrees
    };
    const std::vector<crssc::SampleId> ids{0, 1, 2, 3, 4};
    std::vector<double> losses, certs;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        losses.push_back(crssc::lsr_cross_entropy(preds[i], labels[i], 0.1));
        certs.push_back(crssc::certainty(preds[i]));
        std::printf("sample %zu  loss %.3f  certainty %.3f\n", i, losses.back(), certs.back());
    }
    const auto part = crssc::partition_batch(ids, losses, certs);
    std::printf("loss threshold %.3f, certainty threshold %.3f\n", part.loss_threshold, part.certainty_threshold);

    crssc::PredictionHistory history(5);
    for (std::int64_t epoch = 1; epoch <= 3; ++epoch) history.record(2, epoch, preds[2]);
    for (auto id : part.easy_ids) std::printf("easy      %llu\n", static_cast<unsigned long long>(id));
    for (auto id : part.reusable_ids)
        std::printf("reusable  %llu -> label %zu\n", static_cast<unsigned long long>(id),
                    crssc::corrected_label(history, id, preds[id]));
    for (auto id : part.dropped_ids) std::printf("dropped   %llu\n", static_cast<unsigned long long>(id));
}
