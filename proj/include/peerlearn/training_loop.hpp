#pragma once

// Epoch/mini-batch driver shared by every strategy so that all of them see
// the same data order for a given shuffle seed.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "peerlearn/nn.hpp"
#include "peerlearn/noisy_data.hpp"
#include "peerlearn/run_record.hpp"

namespace peerlearn {

struct BatchStats {
    std::size_t selected = 0;
    std::size_t selected_clean = 0;
    std::size_t skipped_updates = 0;
    bool has_split = false;
    std::size_t n_agree = 0;
    std::size_t n_disagree = 0;
};

// Permutation of [0, n) for one epoch; depends only on (n, seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t shuffle_seed, std::size_t epoch);

struct TrainingLoop {
    std::string strategy;
    // Runs one update on a mini-batch during `epoch` with drop rate `d`.
    std::function<BatchStats(std::span<const data::Sample> batch, std::size_t epoch, double d)> step;
    // Returns h1 and, for two-network strategies, h2.
    std::function<std::pair<const nn::Model*, const nn::Model*>()> models;
    std::function<double(std::size_t epoch)> drop_rate = [](std::size_t) { return 0.0; };
};

// Last mini-batch of an epoch may be short.
RunRecord run_training_loop(const TrainingLoop& loop, const data::Dataset& train_ds,
                            const data::Dataset& test_ds, std::size_t epochs,
                            std::size_t batch_size, std::uint64_t shuffle_seed);

}  // namespace peerlearn
