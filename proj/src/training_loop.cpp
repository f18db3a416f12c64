#include "peerlearn/training_loop.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "peerlearn/errors.hpp"
#include "peerlearn/seeding.hpp"

namespace peerlearn {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t shuffle_seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(shuffle_seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

RunRecord run_training_loop(const TrainingLoop& loop, const data::Dataset& train_ds,
                            const data::Dataset& test_ds, std::size_t epochs,
                            std::size_t batch_size, std::uint64_t shuffle_seed) {
    if (epochs < 1) throw ConfigError("need at least one epoch", "epochs");
    if (batch_size < 2) throw ConfigError("batch size must be >= 2", "batch_size");
    if (batch_size > train_ds.size()) {
        throw ConfigError("batch size " + std::to_string(batch_size) + " exceeds the " +
                              std::to_string(train_ds.size()) + " training samples",
                          "batch_size");
    }

    RunRecord record;
    record.strategy = loop.strategy;
    std::vector<data::Sample> batch;
    batch.reserve(batch_size);

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const double d = loop.drop_rate(epoch);
        const auto order = epoch_order(train_ds.size(), shuffle_seed, epoch);

        std::size_t selected = 0;
        std::size_t selected_clean = 0;
        std::size_t skipped = 0;
        std::size_t split_batches = 0;
        double agree_sum = 0.0;
        double disagree_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            batch.clear();
            for (std::size_t k = start; k < stop; ++k) batch.push_back(train_ds[order[k]]);
            const BatchStats stats = loop.step(batch, epoch, d);
            selected += stats.selected;
            selected_clean += stats.selected_clean;
            skipped += stats.skipped_updates;
            if (stats.has_split) {
                ++split_batches;
                agree_sum += static_cast<double>(stats.n_agree);
                disagree_sum += static_cast<double>(stats.n_disagree);
            }
        }

        EpochRow row;
        row.epoch = epoch;
        row.drop_rate = d;
        const auto [h1, h2] = loop.models();
        row.train_acc_h1 = observed_accuracy(*h1, train_ds);
        row.test_acc_h1 = clean_accuracy(*h1, test_ds);
        if (h2 != nullptr) {
            row.train_acc_h2 = observed_accuracy(*h2, train_ds);
            row.test_acc_h2 = clean_accuracy(*h2, test_ds);
        }
        if (selected > 0) {
            row.selection_label_precision =
                static_cast<double>(selected_clean) / static_cast<double>(selected);
        }
        if (split_batches > 0) {
            row.mean_agree = agree_sum / static_cast<double>(split_batches);
            row.mean_disagree = disagree_sum / static_cast<double>(split_batches);
        }
        row.skipped_updates = skipped;
        record.rows.push_back(row);
    }
    finalize_summary(record);
    return record;
}

}  // namespace peerlearn
