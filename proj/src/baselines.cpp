#include "peerlearn/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "peerlearn/errors.hpp"
#include "peerlearn/training_loop.hpp"

namespace peerlearn {

namespace {

nn::Model step_on(const nn::Model& model, Batch batch, const IndexList& indices,
                  const StrategyConfig& cfg) {
    if (indices.empty()) return model;
    const auto grad = nn::gradient(model, to_examples(batch, indices), cfg.loss_cfg);
    return nn::sgd_step(model, grad, cfg.optimizer.learning_rate);
}

std::vector<double> batch_losses(const nn::Model& model, Batch batch, const nn::LossConfig& cfg) {
    std::vector<double> losses;
    losses.reserve(batch.size());
    for (const Sample& s : batch) {
        losses.push_back(nn::per_example_loss(model, s.features, s.observed_label, cfg));
    }
    return losses;
}

IndexList all_indices(std::size_t n) {
    IndexList idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace

StrategyKind parse_strategy(std::string_view name) {
    if (name == "plain") return StrategyKind::plain;
    if (name == "decoupling") return StrategyKind::decoupling;
    if (name == "co_teaching") return StrategyKind::co_teaching;
    if (name == "peer_learning") return StrategyKind::peer_learning;
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::plain: return "plain";
        case StrategyKind::decoupling: return "decoupling";
        case StrategyKind::co_teaching: return "co_teaching";
        case StrategyKind::peer_learning: return "peer_learning";
    }
    return "unknown";
}

bool uses_schedule(StrategyKind kind) {
    return kind == StrategyKind::co_teaching || kind == StrategyKind::peer_learning;
}

void StrategyConfig::validate() const {
    if (uses_schedule(kind)) schedule.validate();
    optimizer.validate();
    loss_cfg.validate();
}

nn::Model plain_step(const nn::Model& model, Batch batch, const StrategyConfig& cfg) {
    if (batch.empty()) throw ContractError("plain_step needs a non-empty batch");
    const auto grad = nn::gradient(model, to_examples(batch), cfg.loss_cfg);
    return nn::sgd_step(model, grad, cfg.optimizer.learning_rate);
}

PairStep decoupling_step(const nn::Model& h1, const nn::Model& h2, Batch batch,
                         const StrategyConfig& cfg) {
    PairStep out;
    out.split = split_batch(h1, h2, batch);
    out.update_h1 = out.split.disagree_idx;
    out.update_h2 = out.split.disagree_idx;
    out.h1 = step_on(h1, batch, out.update_h1, cfg);
    out.h2 = step_on(h2, batch, out.update_h2, cfg);
    out.selected = out.update_h1.size() + out.update_h2.size();
    out.selected_clean = 2 * count_clean(batch, out.split.disagree_idx);
    return out;
}

PairStep co_teaching_step(const nn::Model& h1, const nn::Model& h2, Batch batch,
                          const StrategyConfig& cfg, std::size_t epoch) {
    if (batch.empty()) throw ContractError("co_teaching_step needs a non-empty batch");
    const double d = drop_rate(cfg.schedule, epoch);
    const IndexList everything = all_indices(batch.size());
    const IndexList r1 = select_small_loss(batch_losses(h1, batch, cfg.loss_cfg), everything, d);
    const IndexList r2 = select_small_loss(batch_losses(h2, batch, cfg.loss_cfg), everything, d);

    PairStep out;
    out.update_h1 = r2;
    out.update_h2 = r1;
    std::sort(out.update_h1.begin(), out.update_h1.end());
    std::sort(out.update_h2.begin(), out.update_h2.end());
    out.h1 = step_on(h1, batch, out.update_h1, cfg);
    out.h2 = step_on(h2, batch, out.update_h2, cfg);
    out.selected = r1.size() + r2.size();
    out.selected_clean = count_clean(batch, r1) + count_clean(batch, r2);
    return out;
}

RunRecord train_strategy(const StrategyConfig& cfg, const ModelSpec& model,
                         const data::Dataset& train_ds, const data::Dataset& test_ds,
                         std::size_t epochs, std::size_t batch_size, std::uint64_t shuffle_seed) {
    cfg.validate();
    if (cfg.kind == StrategyKind::peer_learning) {
        PeerTrainer trainer = make_peer_trainer(model.layer_dims, model.activation, model.seed_h1,
                                                model.seed_h2, cfg.schedule, cfg.optimizer,
                                                cfg.loss_cfg);
        return train(trainer, train_ds, test_ds, epochs, batch_size, shuffle_seed);
    }

    nn::Model h1 = nn::init_model(model.layer_dims, model.seed_h1, model.activation);
    nn::Model h2;
    TrainingLoop loop;
    loop.strategy = std::string(to_string(cfg.kind));

    if (cfg.kind == StrategyKind::plain) {
        loop.models = [&] { return std::pair<const nn::Model*, const nn::Model*>{&h1, nullptr}; };
        loop.step = [&](Batch batch, std::size_t, double) {
            h1 = plain_step(h1, batch, cfg);
            BatchStats stats;
            stats.selected = batch.size();
            stats.selected_clean = count_clean(batch, all_indices(batch.size()));
            return stats;
        };
    } else {
        if (model.seed_h1 == model.seed_h2) {
            throw ConfigError("the two networks need different initialization seeds");
        }
        h2 = nn::init_model(model.layer_dims, model.seed_h2, model.activation);
        loop.models = [&] { return std::pair<const nn::Model*, const nn::Model*>{&h1, &h2}; };
        if (cfg.kind == StrategyKind::co_teaching) {
            loop.drop_rate = [&](std::size_t epoch) { return drop_rate(cfg.schedule, epoch); };
        }
        loop.step = [&](Batch batch, std::size_t epoch, double) {
            PairStep s = cfg.kind == StrategyKind::decoupling
                             ? decoupling_step(h1, h2, batch, cfg)
                             : co_teaching_step(h1, h2, batch, cfg, epoch);
            BatchStats stats;
            stats.selected = s.selected;
            stats.selected_clean = s.selected_clean;
            stats.skipped_updates = (s.update_h1.empty() ? 1 : 0) + (s.update_h2.empty() ? 1 : 0);
            stats.has_split = cfg.kind == StrategyKind::decoupling;
            stats.n_agree = s.split.agree_idx.size();
            stats.n_disagree = s.split.disagree_idx.size();
            h1 = std::move(s.h1);
            h2 = std::move(s.h2);
            return stats;
        };
    }
    return run_training_loop(loop, train_ds, test_ds, epochs, batch_size, shuffle_seed);
}

}  // namespace peerlearn
