#include "peerlearn/run_record.hpp"

#include <algorithm>
#include <functional>

namespace peerlearn {

namespace {

constexpr std::size_t kEvalChunk = 512;

// Calls visit(sample, predicted_label) for every sample.
void for_each_prediction(const nn::Model& model, const data::Dataset& ds,
                         const std::function<void(const data::Sample&, std::size_t)>& visit) {
    std::vector<std::span<const double>> inputs;
    for (std::size_t start = 0; start < ds.size(); start += kEvalChunk) {
        const std::size_t stop = std::min(ds.size(), start + kEvalChunk);
        inputs.clear();
        for (std::size_t i = start; i < stop; ++i) inputs.push_back(ds[i].features);
        const auto logits = nn::forward_batch(model, inputs);
        for (std::size_t i = start; i < stop; ++i) visit(ds[i], nn::argmax(logits.row(i - start)));
    }
}

}  // namespace

double clean_accuracy(const nn::Model& model, const data::Dataset& ds) {
    std::size_t total = 0;
    std::size_t correct = 0;
    for_each_prediction(model, ds, [&](const data::Sample& s, std::size_t pred) {
        if (s.is_out_of_domain) return;
        ++total;
        if (pred == s.clean_label) ++correct;
    });
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double observed_accuracy(const nn::Model& model, const data::Dataset& ds) {
    if (ds.empty()) return 0.0;
    std::size_t correct = 0;
    for_each_prediction(model, ds, [&](const data::Sample& s, std::size_t pred) {
        if (pred == s.observed_label) ++correct;
    });
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

void finalize_summary(RunRecord& record) {
    if (record.rows.empty()) return;
    const EpochRow& last = record.rows.back();
    record.summary.best_test_accuracy = last.test_acc_h1;
    record.summary.best_network = "h1";
    if (last.test_acc_h2 && *last.test_acc_h2 > last.test_acc_h1) {
        record.summary.best_test_accuracy = *last.test_acc_h2;
        record.summary.best_network = "h2";
    }
}

}  // namespace peerlearn
