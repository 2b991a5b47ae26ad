// ============================================================================
// trainer.hpp - warm-up followed by per-batch drop / reuse / relabel training
//
// Epochs 1..warmup_epochs train on every sample with its observed label.
// Later epochs partition each mini-batch, relabel the reusable part from
// prediction history and step on the mean gradient of easy + reusable only.
// ============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "crssc/classifier.hpp"
#include "crssc/csv.hpp"
#include "crssc/epoch_log.hpp"
#include "crssc/history.hpp"
#include "crssc/loss.hpp"
#include "crssc/metrics.hpp"
#include "crssc/noisegen.hpp"
#include "crssc/selection.hpp"

namespace crssc {

struct TrainConfig {
    std::size_t warmup_epochs = 5;
    std::size_t max_epochs = 60;
    std::size_t history_length = 5;
    double epsilon = 0.5;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 0.0003;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden_dims{32};

    std::vector<std::size_t> layer_dims(std::size_t input_dim, std::size_t num_classes) const {
        std::vector<std::size_t> dims{input_dim};
        dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
        dims.push_back(num_classes);
        return dims;
    }
};

inline void validate(const TrainConfig& c) {
    if (c.warmup_epochs < 1) throw std::invalid_argument("warmup_epochs: must be at least 1");
    if (c.warmup_epochs > c.max_epochs)
        throw std::invalid_argument("warmup_epochs: must not exceed max_epochs");
    if (!(c.epsilon >= 0.0 && c.epsilon < 1.0))
        throw std::invalid_argument("epsilon: must be in [0,1), got " + csv::format_double(c.epsilon));
    if (!(c.lr > 0.0) || !std::isfinite(c.lr)) throw std::invalid_argument("lr: must be positive");
    if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw std::invalid_argument("momentum: must be in [0,1)");
    if (!(c.weight_decay >= 0.0) || !std::isfinite(c.weight_decay))
        throw std::invalid_argument("weight_decay: must be non-negative");
    if (c.batch_size < 1) throw std::invalid_argument("batch_size: must be at least 1");
    for (std::size_t h : c.hidden_dims)
        if (h == 0) throw std::invalid_argument("hidden: every hidden width must be positive");
}

// Deterministic permutation of [0, n) for the given epoch.
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::int64_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

using Batch = std::vector<const ProvenancedSample*>;

inline std::vector<Batch> make_batches(const Dataset& ds, std::uint64_t seed, std::int64_t epoch,
                                       std::size_t batch_size) {
    const auto order = epoch_order(ds.size(), seed, epoch);
    std::vector<Batch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        Batch b;
        for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i)
            b.push_back(&ds.samples[order[i]]);
        batches.push_back(std::move(b));
    }
    return batches;
}

// One training example of a gradient step: input plus the label it is trained on.
struct LabeledInput {
    std::span<const double> features;
    std::size_t label;
};

inline Matrix stack_features(const Batch& batch, std::size_t feature_dim) {
    Matrix x(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(feature_dim));
    for (std::size_t i = 0; i < batch.size(); ++i)
        for (std::size_t f = 0; f < feature_dim; ++f)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = batch[i]->features[f];
    return x;
}

inline Prediction prediction_row(const Matrix& probs, Eigen::Index row) {
    return Prediction{detail::to_vector(probs.row(row))};
}

// Mean LSR cross-entropy gradient over `examples`. Predictions of the forward
// pass are appended to `preds` if given.
inline GradientSet mean_gradient(const ModelState& model, std::span<const LabeledInput> examples, double epsilon,
                                 std::vector<Prediction>* preds = nullptr) {
    if (examples.empty()) return zero_gradients(model.layer_dims);
    const auto n = static_cast<Eigen::Index>(examples.size());
    const auto k = static_cast<Eigen::Index>(model.num_classes());
    Matrix x(n, static_cast<Eigen::Index>(model.input_dim()));
    Matrix t(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& ex = examples[static_cast<std::size_t>(i)];
        if (ex.features.size() != model.input_dim())
            throw std::invalid_argument("features: expected " + std::to_string(model.input_dim()) + " values");
        x.row(i) = detail::row_matrix(ex.features);
        const auto target = lsr_target(ex.label, model.num_classes(), epsilon);
        t.row(i) = detail::row_matrix(target.dist);
    }
    Matrix probs;
    GradientSet g = batch_gradient(model, x, t, 1.0 / static_cast<double>(n), preds ? &probs : nullptr);
    if (preds)
        for (Eigen::Index i = 0; i < n; ++i) preds->push_back(prediction_row(probs, i));
    return g;
}

// ---------------------------------------------------------------------------
// Warm-up
// ---------------------------------------------------------------------------

inline EpochLog warmup_epoch(ModelState& model, const Dataset& ds, PredictionHistory& history,
                             const TrainConfig& cfg, std::int64_t epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.selective = false;
    log.samples.reserve(ds.size());
    double loss_sum = 0.0;
    for (const Batch& batch : make_batches(ds, cfg.seed, epoch, cfg.batch_size)) {
        std::vector<LabeledInput> examples;
        examples.reserve(batch.size());
        for (const auto* s : batch) examples.push_back({s->features, s->observed_label});
        std::vector<Prediction> preds;
        preds.reserve(batch.size());
        const GradientSet g = mean_gradient(model, examples, cfg.epsilon, &preds);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto* s = batch[i];
            const double loss = lsr_cross_entropy(preds[i], s->observed_label, cfg.epsilon);
            loss_sum += loss;
            log.samples.push_back({s->id, loss, certainty(preds[i]), Group::All,
                                   static_cast<std::int64_t>(s->observed_label), preds[i].argmax()});
            history.record(s->id, epoch, preds[i]);
        }
        sgd_step(model, g, cfg.lr, cfg.momentum, cfg.weight_decay);
    }
    log.mean_loss = ds.size() ? loss_sum / static_cast<double>(ds.size()) : 0.0;
    return log;
}

// ---------------------------------------------------------------------------
// Selective phase
// ---------------------------------------------------------------------------

// Everything decided about one batch before the update.
struct BatchPlan {
    BatchPartition partition;
    std::vector<SampleSnapshot> snapshots;   // parallel to the batch
    std::vector<Prediction> predictions;     // parallel to the batch
    std::vector<LabelCorrection> corrections;
    // (batch index, training label) for easy then reusable samples, in batch order.
    std::vector<std::pair<std::size_t, std::size_t>> selected;
};

// Forward pass, partition and relabel. Does not touch history.
inline BatchPlan plan_batch(const ModelState& model, const Batch& batch, const PredictionHistory& history,
                            const TrainConfig& cfg) {
    BatchPlan plan;
    const std::size_t n = batch.size();
    std::vector<SampleId> ids(n);
    std::vector<double> losses(n), certs(n);
    plan.predictions.reserve(n);
    const Matrix probs = forward_batch(model, stack_features(batch, model.input_dim()));
    for (std::size_t i = 0; i < n; ++i) {
        ids[i] = batch[i]->id;
        plan.predictions.push_back(prediction_row(probs, static_cast<Eigen::Index>(i)));
        losses[i] = lsr_cross_entropy(plan.predictions[i], batch[i]->observed_label, cfg.epsilon);
        certs[i] = certainty(plan.predictions[i]);
    }
    plan.partition = partition_batch(ids, losses, certs);

    std::unordered_map<SampleId, Group> group;
    for (SampleId id : plan.partition.easy_ids) group[id] = Group::Easy;
    for (SampleId id : plan.partition.reusable_ids) group[id] = Group::Reusable;
    for (SampleId id : plan.partition.dropped_ids) group[id] = Group::Dropped;

    plan.snapshots.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto* s = batch[i];
        SampleSnapshot snap{s->id, losses[i], certs[i], group.at(s->id), -1, plan.predictions[i].argmax()};
        if (snap.group == Group::Easy) {
            snap.label_used = static_cast<std::int64_t>(s->observed_label);
            plan.selected.emplace_back(i, s->observed_label);
        } else if (snap.group == Group::Reusable) {
            const std::size_t corr = corrected_label(history, s->id, plan.predictions[i]);
            snap.label_used = static_cast<std::int64_t>(corr);
            plan.corrections.push_back({s->id, s->observed_label, corr});
            plan.selected.emplace_back(i, corr);
        }
        plan.snapshots.push_back(snap);
    }
    return plan;
}

// Mean gradient over the selected (easy + reusable) samples of a planned batch.
inline GradientSet selected_gradient(const ModelState& model, const Batch& batch, const BatchPlan& plan,
                                     double epsilon) {
    std::vector<LabeledInput> examples;
    examples.reserve(plan.selected.size());
    for (const auto& [idx, label] : plan.selected) examples.push_back({batch[idx]->features, label});
    return mean_gradient(model, examples, epsilon);
}

inline EpochLog crssc_epoch(ModelState& model, const Dataset& ds, PredictionHistory& history,
                            const TrainConfig& cfg, std::int64_t epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.selective = true;
    log.samples.reserve(ds.size());
    double loss_sum = 0.0;
    for (const Batch& batch : make_batches(ds, cfg.seed, epoch, cfg.batch_size)) {
        BatchPlan plan = plan_batch(model, batch, history, cfg);
        // Relabeling only looks at earlier epochs; commit this epoch afterwards.
        for (std::size_t i = 0; i < batch.size(); ++i) history.record(batch[i]->id, epoch, plan.predictions[i]);

        for (const auto& snap : plan.snapshots) loss_sum += snap.loss;
        if (plan.partition.certainty_fallback) ++log.fallback_batches;
        if (plan.selected.empty()) {
            ++log.skipped_steps;
        } else {
            const GradientSet g = selected_gradient(model, batch, plan, cfg.epsilon);
            sgd_step(model, g, cfg.lr, cfg.momentum, cfg.weight_decay);
        }
        log.samples.insert(log.samples.end(), plan.snapshots.begin(), plan.snapshots.end());
        log.corrections.insert(log.corrections.end(), plan.corrections.begin(), plan.corrections.end());
        log.partitions.push_back(std::move(plan.partition));
    }
    log.mean_loss = ds.size() ? loss_sum / static_cast<double>(ds.size()) : 0.0;
    return log;
}

// ---------------------------------------------------------------------------
// Full schedule
// ---------------------------------------------------------------------------

struct TrainResult {
    ModelState model;
    std::vector<EpochLog> logs;
    PredictionHistory history;
};

using EpochCallback = std::function<void(const EpochLog&)>;

inline TrainResult train(const Dataset& ds, const Dataset& test_set, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
    validate(cfg);
    if (ds.samples.empty()) throw std::invalid_argument("train: empty training set");
    TrainResult r{init_model(cfg.layer_dims(ds.feature_dim, ds.num_classes), cfg.seed), {},
                  PredictionHistory(cfg.history_length)};
    for (std::size_t t = 1; t <= cfg.max_epochs; ++t) {
        const auto epoch = static_cast<std::int64_t>(t);
        EpochLog log = t <= cfg.warmup_epochs ? warmup_epoch(r.model, ds, r.history, cfg, epoch)
                                              : crssc_epoch(r.model, ds, r.history, cfg, epoch);
        if (!test_set.samples.empty()) log.test_accuracy = test_accuracy(r.model, test_set);
        log.train_fit = fit_rates(r.model, ds);
        if (on_epoch) on_epoch(log);
        r.logs.push_back(std::move(log));
    }
    return r;
}

// epoch,sample_id,loss,certainty,group,label_used ; rows in batch order.
inline void write_epochs_csv(std::ostream& os, std::span<const EpochLog> logs) {
    os << "epoch,sample_id,loss,certainty,group,label_used\n";
    for (const auto& log : logs)
        for (const auto& s : log.samples)
            os << log.epoch << ',' << s.id << ',' << csv::format_double(s.loss) << ','
               << csv::format_double(s.certainty) << ',' << to_string(s.group) << ',' << s.label_used << '\n';
}

}  // namespace crssc
