#pragma once

// Per-epoch metrics shared by every training strategy, and the accuracy /
// label-precision definitions behind them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "peerlearn/nn.hpp"
#include "peerlearn/noisy_data.hpp"

namespace peerlearn {

struct EpochRow {
    std::size_t epoch = 0;
    double drop_rate = 0.0;
    // Fit to the observed (possibly noisy) training labels.
    double train_acc_h1 = 0.0;
    std::optional<double> train_acc_h2;
    // Against clean labels, in-domain test samples only.
    double test_acc_h1 = 0.0;
    std::optional<double> test_acc_h2;
    // Fraction of selected training instances that are in-domain with
    // observed == clean. Empty when nothing was selected in the epoch.
    std::optional<double> selection_label_precision;
    std::optional<double> mean_agree;
    std::optional<double> mean_disagree;
    std::size_t skipped_updates = 0;

    friend bool operator==(const EpochRow&, const EpochRow&) = default;
};

struct RunSummary {
    double best_test_accuracy = 0.0;
    std::string best_network = "h1";

    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

struct RunRecord {
    std::string strategy;
    std::uint64_t seed = 0;
    std::vector<EpochRow> rows;
    RunSummary summary;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

// Correct / total against clean_label over in-domain samples.
double clean_accuracy(const nn::Model& model, const data::Dataset& ds);
// Correct / total against observed_label over every sample.
double observed_accuracy(const nn::Model& model, const data::Dataset& ds);

// Fills `summary` from the last row: the better of h1/h2, h1 on ties.
void finalize_summary(RunRecord& record);

}  // namespace peerlearn
