// ============================================================================
// history.hpp - per-sample prediction history and label correction
//
// Each sample keeps its last m (epoch, argmax label, max probability)
// records. The corrected label is the class with the highest probability
// mass accumulated over those records.
// ============================================================================
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "crssc/classifier.hpp"
#include "crssc/selection.hpp"

namespace crssc {

struct HistoryRecord {
    std::int64_t epoch = 0;
    std::size_t label = 0;
    double prob = 0.0;

    bool operator==(const HistoryRecord&) const = default;
};

class PredictionHistory {
public:
    explicit PredictionHistory(std::size_t capacity = 5) : capacity_(capacity) {}

    std::size_t capacity() const noexcept { return capacity_; }

    // Appends (argmax, max prob) for `epoch`; evicts the oldest beyond capacity.
    void record(SampleId id, std::int64_t epoch, const Prediction& pred) {
        Entry& e = entries_[id];
        if (e.last_epoch && epoch <= *e.last_epoch)
            throw std::invalid_argument("history: epoch " + std::to_string(epoch) +
                                        " not after newest recorded epoch " + std::to_string(*e.last_epoch) +
                                        " for sample " + std::to_string(id));
        e.last_epoch = epoch;
        if (capacity_ == 0) return;
        e.records.push_front({epoch, pred.argmax(), pred.max_prob()});
        while (e.records.size() > capacity_) e.records.pop_back();
    }

    // Newest first. Empty for unknown samples.
    const std::deque<HistoryRecord>& records(SampleId id) const {
        static const std::deque<HistoryRecord> empty;
        auto it = entries_.find(id);
        return it == entries_.end() ? empty : it->second.records;
    }

    std::size_t size() const noexcept { return entries_.size(); }

    // sample_id,epoch,label,prob ; samples ascending, records oldest first.
    void write_csv(std::ostream& os) const {
        std::map<SampleId, const Entry*> sorted;
        for (const auto& [id, e] : entries_) sorted.emplace(id, &e);
        os << "sample_id,epoch,label,prob\n";
        const auto old = os.precision(std::numeric_limits<double>::max_digits10);
        for (const auto& [id, e] : sorted)
            for (auto it = e->records.rbegin(); it != e->records.rend(); ++it)
                os << id << ',' << it->epoch << ',' << it->label << ',' << it->prob << '\n';
        os.precision(old);
    }

private:
    struct Entry {
        std::deque<HistoryRecord> records;
        std::optional<std::int64_t> last_epoch;
    };

    std::size_t capacity_;
    std::unordered_map<SampleId, Entry> entries_;
};

// Per-class sum of recorded probabilities.
inline std::vector<double> accumulated_scores(const std::deque<HistoryRecord>& records,
                                              std::size_t num_classes) {
    std::vector<double> score(num_classes, 0.0);
    for (const auto& r : records)
        if (r.label < num_classes) score[r.label] += r.prob;
    return score;
}

// Argmax of accumulated probability; ties go to the smallest class index.
// Falls back to the current prediction when no records are retained.
inline std::size_t corrected_label(const PredictionHistory& history, SampleId id, const Prediction& current) {
    const auto& recs = history.records(id);
    if (recs.empty()) return current.argmax();
    const auto score = accumulated_scores(recs, current.num_classes());
    std::size_t best = 0;
    for (std::size_t j = 1; j < score.size(); ++j)
        if (score[j] > score[best]) best = j;
    return best;
}

}  // namespace crssc
