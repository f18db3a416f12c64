#pragma once

// Peer-learning: two networks split each mini-batch by whether their
// predictions agree. On the agreeing part each network picks its small-loss
// instances and hands them to the other; both also train on every
// disagreeing instance.

#include <cstddef>
#include <span>
#include <vector>

#include "peerlearn/nn.hpp"
#include "peerlearn/noisy_data.hpp"
#include "peerlearn/run_record.hpp"

namespace peerlearn {

using data::Sample;
using Batch = std::span<const Sample>;
using IndexList = std::vector<std::size_t>;

struct DropSchedule {
    // Largest fraction of the agreement set that gets dropped.
    double xi = 0.0;
    // Epoch after which the drop rate stays at xi.
    std::size_t t_k = 1;

    void validate() const;
    friend bool operator==(const DropSchedule&, const DropSchedule&) = default;
};

// xi * min(T / t_k, 1).
double drop_rate(const DropSchedule& schedule, std::size_t epoch);

struct BatchSplit {
    IndexList agree_idx;
    IndexList disagree_idx;
};

BatchSplit split_batch(const nn::Model& h1, const nn::Model& h2, Batch batch);
BatchSplit split_by_predictions(std::span<const std::size_t> pred1,
                                std::span<const std::size_t> pred2);

// Smallest cardinality k with k >= (1 - d) * n_agree.
std::size_t keep_count(std::size_t n_agree, double d);

// The keep_count(|candidates|, d) candidates with the smallest loss under
// `model`, ordered by ascending loss (lower batch index first on ties).
IndexList select_small_loss(const nn::Model& model, Batch batch,
                            std::span<const std::size_t> candidates, double d,
                            const nn::LossConfig& loss_cfg);
// Same rule on precomputed per-batch losses.
IndexList select_small_loss(std::span<const double> batch_losses,
                            std::span<const std::size_t> candidates, double d);

struct SelectionResult {
    // Chosen by h2's losses, consumed by h1.
    IndexList keep_for_h1;
    // Chosen by h1's losses, consumed by h2.
    IndexList keep_for_h2;
};

struct PeerTrainer {
    nn::Model h1;
    nn::Model h2;
    DropSchedule schedule;
    nn::OptimizerConfig optimizer;
    nn::LossConfig loss_cfg;
    std::size_t epoch = 0;
};

PeerTrainer make_peer_trainer(std::vector<std::size_t> layer_dims, nn::Activation activation,
                              std::uint64_t seed_h1, std::uint64_t seed_h2,
                              const DropSchedule& schedule, const nn::OptimizerConfig& optimizer,
                              const nn::LossConfig& loss_cfg);

struct StepReport {
    BatchSplit split;
    SelectionResult selection;
    // Sorted batch indices each network trained on.
    IndexList update_h1;
    IndexList update_h2;
    bool h1_skipped = false;
    bool h2_skipped = false;
    double drop_rate = 0.0;
    // Over keep_for_h1 and keep_for_h2 together (metrics only).
    std::size_t selected = 0;
    std::size_t selected_clean = 0;
};

enum class UpdateOrder { h1_first, h2_first };

struct StepResult {
    PeerTrainer trainer;
    StepReport report;
};

// One simultaneous cross-update: split and selections come from the
// pre-step networks, and both gradients are taken at pre-step parameters.
// `order` only changes which write happens first; it exists so callers can
// check that it does not matter.
StepResult peer_step(const PeerTrainer& trainer, Batch batch,
                     UpdateOrder order = UpdateOrder::h1_first);

RunRecord train(PeerTrainer& trainer, const data::Dataset& train_ds, const data::Dataset& test_ds,
                std::size_t epochs, std::size_t batch_size, std::uint64_t shuffle_seed);

// Sample labels as network examples; `batch` must outlive the result.
std::vector<nn::Example> to_examples(Batch batch, std::span<const std::size_t> indices);
std::vector<nn::Example> to_examples(Batch batch);

std::size_t count_clean(Batch batch, std::span<const std::size_t> indices);

}  // namespace peerlearn
