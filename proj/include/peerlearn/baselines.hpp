#pragma once

// Reference strategies trained on the same backbone, batching and selection
// rules as peer-learning: a single plain network, Decoupling (update only on
// disagreement) and Co-teaching (swap small-loss picks over the whole batch).

#include <cstdint>
#include <string_view>
#include <vector>

#include "peerlearn/nn.hpp"
#include "peerlearn/noisy_data.hpp"
#include "peerlearn/peer_learning.hpp"
#include "peerlearn/run_record.hpp"

namespace peerlearn {

enum class StrategyKind { plain, decoupling, co_teaching, peer_learning };

StrategyKind parse_strategy(std::string_view name);
std::string_view to_string(StrategyKind kind);
bool uses_schedule(StrategyKind kind);

struct StrategyConfig {
    StrategyKind kind = StrategyKind::peer_learning;
    // Ignored by plain and decoupling.
    DropSchedule schedule;
    nn::OptimizerConfig optimizer;
    nn::LossConfig loss_cfg;

    void validate() const;
    friend bool operator==(const StrategyConfig&, const StrategyConfig&) = default;
};

nn::Model plain_step(const nn::Model& model, Batch batch, const StrategyConfig& cfg);

// Outcome of a two-network baseline step, with the sets each network trained on.
struct PairStep {
    nn::Model h1;
    nn::Model h2;
    IndexList update_h1;
    IndexList update_h2;
    BatchSplit split;
    std::size_t selected = 0;
    std::size_t selected_clean = 0;
};

PairStep decoupling_step(const nn::Model& h1, const nn::Model& h2, Batch batch,
                         const StrategyConfig& cfg);

// R1/R2 are small-loss picks of h1/h2 over the whole batch; h1 trains on R2
// and h2 on R1.
PairStep co_teaching_step(const nn::Model& h1, const nn::Model& h2, Batch batch,
                          const StrategyConfig& cfg, std::size_t epoch);

struct ModelSpec {
    std::vector<std::size_t> layer_dims;
    nn::Activation activation = nn::Activation::relu;
    std::uint64_t seed_h1 = 1;
    std::uint64_t seed_h2 = 2;
};

// Trains the configured strategy from fresh networks. Plain uses only
// seed_h1, so it starts where h1 of every two-network strategy starts.
RunRecord train_strategy(const StrategyConfig& cfg, const ModelSpec& model,
                         const data::Dataset& train_ds, const data::Dataset& test_ds,
                         std::size_t epochs, std::size_t batch_size, std::uint64_t shuffle_seed);

}  // namespace peerlearn
