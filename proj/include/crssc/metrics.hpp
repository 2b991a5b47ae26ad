// ============================================================================
// metrics.hpp - diagnostics against ground-truth provenance
//
// Scoring rules for selection:
//   Irrelevant -> dropped      correct
//   Mislabeled -> reusable     correct
//   Clean      -> easy | reusable correct
// Relabels are correct when they recover the true label (mislabeled) or keep
// the observed one (clean); irrelevant samples in the reusable set never are.
// ============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "crssc/classifier.hpp"
#include "crssc/csv.hpp"
#include "crssc/epoch_log.hpp"
#include "crssc/noisegen.hpp"

namespace crssc {

class ProvenanceIndex {
public:
    ProvenanceIndex() = default;
    explicit ProvenanceIndex(const Dataset& ds) {
        for (const auto& s : ds.samples) add(s.id, s.observed_label, s.provenance);
    }

    void add(SampleId id, std::size_t observed_label, Provenance p) { entries_[id] = {observed_label, p}; }

    const Provenance& provenance(SampleId id) const { return at(id).provenance; }
    std::size_t observed_label(SampleId id) const { return at(id).observed; }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    struct Entry {
        std::size_t observed;
        Provenance provenance;
    };
    const Entry& at(SampleId id) const {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw std::out_of_range("no provenance for sample " + std::to_string(id));
        return it->second;
    }
    std::unordered_map<SampleId, Entry> entries_;
};

struct GroupAssignment {
    SampleId id;
    Group group;
};

inline bool selection_correct(ProvenanceKind kind, Group g) {
    switch (kind) {
        case ProvenanceKind::Irrelevant: return g == Group::Dropped;
        case ProvenanceKind::Mislabeled: return g == Group::Reusable;
        case ProvenanceKind::Clean: return g == Group::Easy || g == Group::Reusable;
    }
    return false;
}

inline double selection_accuracy(std::span<const GroupAssignment> assignments, const ProvenanceIndex& prov) {
    if (assignments.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& a : assignments)
        if (selection_correct(prov.provenance(a.id).kind, a.group)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(assignments.size());
}

inline std::vector<GroupAssignment> assignments_of(const EpochLog& log) {
    std::vector<GroupAssignment> out;
    out.reserve(log.samples.size());
    for (const auto& s : log.samples) out.push_back({s.id, s.group});
    return out;
}

inline bool relabel_correct(const Provenance& p, std::size_t observed, std::size_t new_label) {
    switch (p.kind) {
        case ProvenanceKind::Mislabeled: return new_label == p.true_label;
        case ProvenanceKind::Clean: return new_label == observed;
        case ProvenanceKind::Irrelevant: return false;
    }
    return false;
}

// Returns 0 when there were no relabels.
inline double relabel_accuracy(std::span<const LabelCorrection> corrections, const ProvenanceIndex& prov) {
    if (corrections.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& c : corrections)
        if (relabel_correct(prov.provenance(c.id), prov.observed_label(c.id), c.new_label)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(corrections.size());
}

// |C^i ∩ C^{i-1} ∩ ... ∩ C^{i-lag}| / |C^i| over per-epoch id sets.
// An empty C^i gives 1.
inline double overlap(std::span<const std::vector<SampleId>> sets, std::size_t index, std::size_t lag) {
    if (index >= sets.size()) throw std::out_of_range("overlap: epoch index out of range");
    if (lag > index)
        throw std::invalid_argument("overlap: lag " + std::to_string(lag) + " needs " + std::to_string(lag + 1) +
                                    " epochs, only " + std::to_string(index + 1) + " available");
    const auto& current = sets[index];
    if (current.empty()) return 1.0;
    std::unordered_set<SampleId> common(current.begin(), current.end());
    for (std::size_t back = 1; back <= lag && !common.empty(); ++back) {
        const std::unordered_set<SampleId> earlier(sets[index - back].begin(), sets[index - back].end());
        std::erase_if(common, [&](SampleId id) { return !earlier.contains(id); });
    }
    return static_cast<double>(common.size()) / static_cast<double>(current.size());
}

// overlap(sets, i, lag) for i = lag .. sets.size()-1.
inline std::vector<double> overlap_curve(std::span<const std::vector<SampleId>> sets, std::size_t lag) {
    std::vector<double> out;
    for (std::size_t i = lag; i < sets.size(); ++i) out.push_back(overlap(sets, i, lag));
    return out;
}

inline double test_accuracy(const ModelState& model, const Dataset& test_set) {
    if (test_set.samples.empty()) throw std::invalid_argument("test_accuracy: empty test set");
    Matrix x(static_cast<Eigen::Index>(test_set.size()), static_cast<Eigen::Index>(model.input_dim()));
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        const auto& f = test_set.samples[i].features;
        if (f.size() != model.input_dim()) throw std::invalid_argument("test_accuracy: feature dimension mismatch");
        x.row(static_cast<Eigen::Index>(i)) = detail::row_matrix(f);
    }
    const Matrix probs = forward_batch(model, x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        Eigen::Index best = 0;
        probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
        if (static_cast<std::size_t>(best) == test_set.samples[i].provenance.true_label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_set.samples.size());
}

namespace detail {
inline double frac(std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
}
}  // namespace detail

inline FitRates fit_rates(const ModelState& model, const Dataset& train_set) {
    FitRates r;
    if (train_set.samples.empty()) return r;
    Matrix x(static_cast<Eigen::Index>(train_set.size()), static_cast<Eigen::Index>(model.input_dim()));
    for (std::size_t i = 0; i < train_set.size(); ++i)
        x.row(static_cast<Eigen::Index>(i)) = detail::row_matrix(train_set.samples[i].features);
    const Matrix probs = forward_batch(model, x);
    std::size_t n_clean = 0, n_mis = 0, n_irr = 0, clean = 0, mis_obs = 0, mis_true = 0, irr = 0;
    for (std::size_t i = 0; i < train_set.size(); ++i) {
        const auto& s = train_set.samples[i];
        Eigen::Index best = 0;
        probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
        const auto pred = static_cast<std::size_t>(best);
        switch (s.provenance.kind) {
            case ProvenanceKind::Clean: ++n_clean; clean += pred == s.observed_label; break;
            case ProvenanceKind::Mislabeled:
                ++n_mis;
                mis_obs += pred == s.observed_label;
                mis_true += pred == s.provenance.true_label;
                break;
            case ProvenanceKind::Irrelevant: ++n_irr; irr += pred == s.observed_label; break;
        }
    }
    r.clean = detail::frac(clean, n_clean);
    r.mislabeled_observed = detail::frac(mis_obs, n_mis);
    r.mislabeled_true = detail::frac(mis_true, n_mis);
    r.irrelevant_observed = detail::frac(irr, n_irr);
    return r;
}

// ---------------------------------------------------------------------------
// Per-epoch diagnostics
// ---------------------------------------------------------------------------

struct GroupStats {
    std::size_t count = 0;
    double mean_loss = 0.0;
    double mean_certainty = 0.0;
};

struct EpochDiagnostics {
    std::int64_t epoch = 0;
    bool selective = false;
    double mean_loss = 0.0;
    std::optional<double> test_accuracy;
    double ratio_easy = 0.0;
    double ratio_reusable = 0.0;
    double ratio_dropped = 0.0;
    std::optional<double> selection_accuracy;
    std::optional<double> relabel_accuracy;
    GroupStats easy, reusable, dropped;
    // End-of-epoch training-set fit; empty when not evaluated.
    std::optional<FitRates> train_fit;
    // Overlap of dropped / easy sets with previous selective epochs, index = lag.
    std::vector<double> dropped_overlap;
    std::vector<double> easy_overlap;
};

inline EpochDiagnostics diagnose(const EpochLog& log, const ProvenanceIndex& prov) {
    EpochDiagnostics d;
    d.epoch = log.epoch;
    d.selective = log.selective;
    d.mean_loss = log.mean_loss;
    d.test_accuracy = log.test_accuracy;

    d.train_fit = log.train_fit;
    for (const auto& s : log.samples) {
        GroupStats* g = s.group == Group::Easy       ? &d.easy
                        : s.group == Group::Reusable ? &d.reusable
                        : s.group == Group::Dropped  ? &d.dropped
                                                     : nullptr;
        if (g) {
            ++g->count;
            g->mean_loss += s.loss;
            g->mean_certainty += s.certainty;
        }
    }
    for (GroupStats* g : {&d.easy, &d.reusable, &d.dropped}) {
        if (g->count == 0) continue;
        g->mean_loss /= static_cast<double>(g->count);
        g->mean_certainty /= static_cast<double>(g->count);
    }

    if (log.selective) {
        const std::size_t n = log.samples.size();
        d.ratio_easy = detail::frac(d.easy.count, n);
        d.ratio_reusable = detail::frac(d.reusable.count, n);
        d.ratio_dropped = detail::frac(d.dropped.count, n);
        d.selection_accuracy = selection_accuracy(assignments_of(log), prov);
        d.relabel_accuracy = relabel_accuracy(log.corrections, prov);
    }
    return d;
}

// Diagnostics for a whole run; overlap curves up to max_lag are computed over
// the selective epochs only.
inline std::vector<EpochDiagnostics> diagnose_run(std::span<const EpochLog> logs, const ProvenanceIndex& prov,
                                                  std::size_t max_lag = 5) {
    std::vector<EpochDiagnostics> out;
    std::vector<std::vector<SampleId>> dropped_sets, easy_sets;
    for (const auto& log : logs) {
        out.push_back(diagnose(log, prov));
        if (!log.selective) continue;
        dropped_sets.push_back(log.ids_in(Group::Dropped));
        easy_sets.push_back(log.ids_in(Group::Easy));
        const std::size_t i = dropped_sets.size() - 1;
        for (std::size_t lag = 0; lag <= std::min(max_lag, i); ++lag) {
            out.back().dropped_overlap.push_back(overlap(dropped_sets, i, lag));
            out.back().easy_overlap.push_back(overlap(easy_sets, i, lag));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace detail {
inline std::string opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }
}  // namespace detail

// epoch,mean_loss,test_acc,ratio_easy,ratio_reusable,ratio_dropped,selection_acc,relabel_acc
// Selection columns are empty for warm-up epochs.
inline void write_summary_csv(std::ostream& os, std::span<const EpochDiagnostics> diags) {
    os << "epoch,mean_loss,test_acc,ratio_easy,ratio_reusable,ratio_dropped,selection_acc,relabel_acc\n";
    for (const auto& d : diags) {
        os << d.epoch << ',' << csv::format_double(d.mean_loss) << ',' << detail::opt(d.test_accuracy) << ',';
        if (d.selective)
            os << csv::format_double(d.ratio_easy) << ',' << csv::format_double(d.ratio_reusable) << ','
               << csv::format_double(d.ratio_dropped) << ',';
        else
            os << ",,,";
        os << detail::opt(d.selection_accuracy) << ',' << detail::opt(d.relabel_accuracy) << '\n';
    }
}

// Plot data: per-provenance fit curves and per-group loss / certainty.
inline void write_diagnostics_csv(std::ostream& os, std::span<const EpochDiagnostics> diags) {
    os << "epoch,selective,fit_clean,fit_mislabeled_observed,fit_mislabeled_true,fit_irrelevant_observed,"
          "easy_loss,easy_certainty,reusable_loss,reusable_certainty,dropped_loss,dropped_certainty\n";
    for (const auto& d : diags) {
        os << d.epoch << ',' << (d.selective ? 1 : 0);
        if (d.train_fit)
            os << ',' << csv::format_double(d.train_fit->clean) << ','
               << csv::format_double(d.train_fit->mislabeled_observed) << ','
               << csv::format_double(d.train_fit->mislabeled_true) << ','
               << csv::format_double(d.train_fit->irrelevant_observed);
        else
            os << ",,,,";
        for (const GroupStats* g : {&d.easy, &d.reusable, &d.dropped})
            os << ',' << csv::format_double(g->mean_loss) << ',' << csv::format_double(g->mean_certainty);
        os << '\n';
    }
}

// epoch,lag,dropped_overlap,easy_overlap
inline void write_overlap_csv(std::ostream& os, std::span<const EpochDiagnostics> diags) {
    os << "epoch,lag,dropped_overlap,easy_overlap\n";
    for (const auto& d : diags)
        for (std::size_t lag = 0; lag < d.dropped_overlap.size(); ++lag)
            os << d.epoch << ',' << lag << ',' << csv::format_double(d.dropped_overlap[lag]) << ','
               << csv::format_double(d.easy_overlap[lag]) << '\n';
}

}  // namespace crssc
