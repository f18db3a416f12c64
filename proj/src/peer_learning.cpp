#include "peerlearn/peer_learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "peerlearn/detail/rounding.hpp"
#include "peerlearn/errors.hpp"
#include "peerlearn/training_loop.hpp"

namespace peerlearn {

namespace {

struct BatchForward {
    std::vector<std::size_t> predictions;
    std::vector<double> losses;
};

BatchForward evaluate(const nn::Model& model, Batch batch, const nn::LossConfig& cfg) {
    std::vector<std::span<const double>> inputs;
    inputs.reserve(batch.size());
    for (const Sample& s : batch) {
        if (s.observed_label >= model.num_classes()) {
            throw LabelError("sample " + std::to_string(s.id) + " carries label " +
                             std::to_string(s.observed_label) + " outside the model's classes");
        }
        inputs.push_back(s.features);
    }
    const nn::LogitTable logits = nn::forward_batch(model, inputs);
    BatchForward out;
    out.predictions.reserve(batch.size());
    out.losses.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out.predictions.push_back(nn::argmax(logits.row(i)));
        out.losses.push_back(nn::loss_from_logits(logits.row(i), batch[i].observed_label, cfg.smoothing));
    }
    return out;
}

IndexList merge_sorted(const IndexList& a, IndexList b) {
    std::sort(b.begin(), b.end());
    IndexList out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

// Applies one SGD step on `indices`, reading gradients at `pre_step`.
bool update_on(nn::Model& target, const nn::Model& pre_step, Batch batch, const IndexList& indices,
               const PeerTrainer& cfg) {
    if (indices.empty()) return false;
    const auto examples = to_examples(batch, indices);
    const auto grad = nn::gradient(pre_step, examples, cfg.loss_cfg);
    target = nn::sgd_step(pre_step, grad, cfg.optimizer.learning_rate);
    return true;
}

}  // namespace

void DropSchedule::validate() const {
    if (!(xi >= 0.0 && xi < 1.0)) throw ConfigError("xi must lie in [0, 1)", "xi");
    if (t_k < 1) throw ConfigError("t_k must be >= 1", "t_k");
}

double drop_rate(const DropSchedule& schedule, std::size_t epoch) {
    return schedule.xi *
           std::min(static_cast<double>(epoch) / static_cast<double>(schedule.t_k), 1.0);
}

BatchSplit split_by_predictions(std::span<const std::size_t> pred1,
                                std::span<const std::size_t> pred2) {
    if (pred1.size() != pred2.size()) throw ShapeError("prediction lists differ in length");
    BatchSplit split;
    for (std::size_t i = 0; i < pred1.size(); ++i) {
        (pred1[i] == pred2[i] ? split.agree_idx : split.disagree_idx).push_back(i);
    }
    return split;
}

BatchSplit split_batch(const nn::Model& h1, const nn::Model& h2, Batch batch) {
    if (batch.empty()) throw ContractError("cannot split an empty batch");
    std::vector<std::span<const double>> inputs;
    inputs.reserve(batch.size());
    for (const Sample& s : batch) inputs.push_back(s.features);
    const auto l1 = nn::forward_batch(h1, inputs);
    const auto l2 = nn::forward_batch(h2, inputs);
    std::vector<std::size_t> p1(batch.size());
    std::vector<std::size_t> p2(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        p1[i] = nn::argmax(l1.row(i));
        p2[i] = nn::argmax(l2.row(i));
    }
    return split_by_predictions(p1, p2);
}

std::size_t keep_count(std::size_t n_agree, double d) {
    return std::min(n_agree, detail::ceil_count((1.0 - d) * static_cast<double>(n_agree)));
}

IndexList select_small_loss(std::span<const double> batch_losses,
                            std::span<const std::size_t> candidates, double d) {
    IndexList order(candidates.begin(), candidates.end());
    for (std::size_t i : order) {
        if (i >= batch_losses.size()) throw ShapeError("candidate index outside the batch");
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (batch_losses[a] != batch_losses[b]) return batch_losses[a] < batch_losses[b];
        return a < b;
    });
    order.resize(keep_count(order.size(), d));
    return order;
}

IndexList select_small_loss(const nn::Model& model, Batch batch,
                            std::span<const std::size_t> candidates, double d,
                            const nn::LossConfig& loss_cfg) {
    std::vector<double> losses(batch.size(), 0.0);
    for (std::size_t i : candidates) {
        if (i >= batch.size()) throw ShapeError("candidate index outside the batch");
        losses[i] = nn::per_example_loss(model, batch[i].features, batch[i].observed_label, loss_cfg);
    }
    return select_small_loss(losses, candidates, d);
}

PeerTrainer make_peer_trainer(std::vector<std::size_t> layer_dims, nn::Activation activation,
                              std::uint64_t seed_h1, std::uint64_t seed_h2,
                              const DropSchedule& schedule, const nn::OptimizerConfig& optimizer,
                              const nn::LossConfig& loss_cfg) {
    if (seed_h1 == seed_h2) {
        throw ConfigError("the two peer networks need different initialization seeds");
    }
    schedule.validate();
    optimizer.validate();
    loss_cfg.validate();
    PeerTrainer t;
    t.h1 = nn::init_model(layer_dims, seed_h1, activation);
    t.h2 = nn::init_model(std::move(layer_dims), seed_h2, activation);
    t.schedule = schedule;
    t.optimizer = optimizer;
    t.loss_cfg = loss_cfg;
    return t;
}

std::vector<nn::Example> to_examples(Batch batch, std::span<const std::size_t> indices) {
    std::vector<nn::Example> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back({batch[i].features, batch[i].observed_label});
    return out;
}

std::vector<nn::Example> to_examples(Batch batch) {
    std::vector<nn::Example> out;
    out.reserve(batch.size());
    for (const Sample& s : batch) out.push_back({s.features, s.observed_label});
    return out;
}

std::size_t count_clean(Batch batch, std::span<const std::size_t> indices) {
    return static_cast<std::size_t>(std::count_if(
        indices.begin(), indices.end(), [&](std::size_t i) { return batch[i].is_clean(); }));
}

StepResult peer_step(const PeerTrainer& trainer, Batch batch, UpdateOrder order) {
    if (batch.empty()) throw ContractError("peer_step needs a non-empty batch");
    const double d = drop_rate(trainer.schedule, trainer.epoch);

    const BatchForward f1 = evaluate(trainer.h1, batch, trainer.loss_cfg);
    const BatchForward f2 = evaluate(trainer.h2, batch, trainer.loss_cfg);

    StepReport report;
    report.drop_rate = d;
    report.split = split_by_predictions(f1.predictions, f2.predictions);
    report.selection.keep_for_h2 = select_small_loss(f1.losses, report.split.agree_idx, d);
    report.selection.keep_for_h1 = select_small_loss(f2.losses, report.split.agree_idx, d);
    report.update_h1 = merge_sorted(report.split.disagree_idx, report.selection.keep_for_h1);
    report.update_h2 = merge_sorted(report.split.disagree_idx, report.selection.keep_for_h2);
    report.selected = report.selection.keep_for_h1.size() + report.selection.keep_for_h2.size();
    report.selected_clean = count_clean(batch, report.selection.keep_for_h1) +
                            count_clean(batch, report.selection.keep_for_h2);

    StepResult result{trainer, std::move(report)};
    StepReport& r = result.report;
    if (order == UpdateOrder::h1_first) {
        r.h1_skipped = !update_on(result.trainer.h1, trainer.h1, batch, r.update_h1, trainer);
        r.h2_skipped = !update_on(result.trainer.h2, trainer.h2, batch, r.update_h2, trainer);
    } else {
        r.h2_skipped = !update_on(result.trainer.h2, trainer.h2, batch, r.update_h2, trainer);
        r.h1_skipped = !update_on(result.trainer.h1, trainer.h1, batch, r.update_h1, trainer);
    }
    return result;
}

RunRecord train(PeerTrainer& trainer, const data::Dataset& train_ds, const data::Dataset& test_ds,
                std::size_t epochs, std::size_t batch_size, std::uint64_t shuffle_seed) {
    TrainingLoop loop;
    loop.strategy = "peer_learning";
    loop.drop_rate = [&](std::size_t epoch) { return drop_rate(trainer.schedule, epoch); };
    loop.models = [&] { return std::pair<const nn::Model*, const nn::Model*>{&trainer.h1, &trainer.h2}; };
    loop.step = [&](Batch batch, std::size_t epoch, double) {
        trainer.epoch = epoch;
        StepResult res = peer_step(trainer, batch);
        trainer = std::move(res.trainer);
        BatchStats stats;
        stats.selected = res.report.selected;
        stats.selected_clean = res.report.selected_clean;
        stats.skipped_updates = (res.report.h1_skipped ? 1 : 0) + (res.report.h2_skipped ? 1 : 0);
        stats.has_split = true;
        stats.n_agree = res.report.split.agree_idx.size();
        stats.n_disagree = res.report.split.disagree_idx.size();
        return stats;
    };
    RunRecord record = run_training_loop(loop, train_ds, test_ds, epochs, batch_size, shuffle_seed);
    trainer.epoch = epochs;
    return record;
}

}  // namespace peerlearn
