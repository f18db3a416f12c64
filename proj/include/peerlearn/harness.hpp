#pragma once

// Experiment configuration, multi-seed orchestration and persistence of run
// records. Everything written here is a pure function of the config and the
// seed list, so repeated runs produce byte-identical files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "peerlearn/baselines.hpp"
#include "peerlearn/dedup.hpp"
#include "peerlearn/noisy_data.hpp"
#include "peerlearn/run_record.hpp"

namespace peerlearn::harness {

struct DatasetSpec {
    std::size_t num_classes = 10;
    std::size_t train_per_class = 500;
    std::size_t test_per_class = 200;
    std::size_t dim = 16;
    double separation = 3.0;
    // When both are set the files are used as-is and no noise is applied.
    std::string train_file;
    std::string test_file;

    friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct ModelSettings {
    std::vector<std::size_t> hidden{128, 128};
    nn::Activation activation = nn::Activation::relu;

    friend bool operator==(const ModelSettings&, const ModelSettings&) = default;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    // `noise.seed` is ignored; every run derives it from the experiment seed.
    data::NoiseSpec noise{0.4, data::FlipModel::symmetric, 0.1, 1.0, 0};
    ModelSettings model;
    StrategyConfig strategy{StrategyKind::peer_learning, DropSchedule{0.35, 10},
                            nn::OptimizerConfig{0.05, 0}, nn::LossConfig{}};
    std::size_t epochs = 40;
    std::size_t batch_size = 64;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::string output_path;

    // Throws ConfigError whose field() is the dotted config key.
    void validate() const;
    std::vector<std::size_t> layer_dims() const;
};

// The defaults above: 10 classes x 500 samples, dim 16, separation 3, 40%
// symmetric flips, 10% cross-domain outliers, xi = 0.35, T_k = 10, 40
// epochs, batch 64, lr 0.05, seeds 1..5.
ExperimentConfig canonical_config(StrategyKind kind = StrategyKind::peer_learning);

// INI sections [dataset] [noise] [model] [strategy] [training] [output].
// Missing keys keep the canonical defaults; unknown sections or keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
std::string config_to_ini(const ExperimentConfig& cfg);

struct SeedData {
    data::Dataset train;
    data::Dataset test;
};

// Generates one Gaussian pool, splits each class into train/test, then
// corrupts only the training part.
SeedData make_seed_data(const ExperimentConfig& cfg, std::uint64_t seed);

ModelSpec model_spec(const ExperimentConfig& cfg, std::uint64_t seed);
std::uint64_t shuffle_seed(std::uint64_t seed);

RunRecord run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

// One record per seed, in seed order. Writes records and aggregates under
// cfg.output_path/<strategy>/ when output_path is set.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

struct StrategySummary {
    std::string strategy;
    std::vector<std::uint64_t> seeds;
    std::vector<double> final_accuracy;
    double mean = 0.0;
    // Sample standard deviation; 0 for a single seed.
    double stddev = 0.0;
    std::size_t wins = 0;
    std::size_t losses = 0;
    std::size_t ties = 0;
};

StrategySummary summarize(const std::vector<RunRecord>& records);

struct ComparisonTable {
    std::vector<StrategySummary> rows;
};

// Wins/losses count (seed, other strategy) pairs with strictly higher/lower
// final accuracy.
ComparisonTable build_comparison(std::vector<std::vector<RunRecord>> per_strategy);

// Runs every config (which must share dataset, noise and seeds). Writes the
// per-strategy records plus comparison.csv / comparison.txt under
// output_dir when it is non-empty.
ComparisonTable compare_strategies(const std::vector<ExperimentConfig>& cfgs,
                                   const std::filesystem::path& output_dir = {});

std::string comparison_csv(const ComparisonTable& table);
std::string comparison_text(const ComparisonTable& table);

// JSON lines: one {"type":"epoch",...} object per epoch, then one
// {"type":"summary",...} object.
std::string record_to_jsonl(const RunRecord& record);
RunRecord record_from_jsonl(std::string_view text);

void write_records(const std::filesystem::path& dir, const std::vector<RunRecord>& records);
std::string aggregate_csv(const StrategySummary& summary);
std::string seeds_csv(const StrategySummary& summary);

// Reads every <strategy>/seed_*.jsonl below `runs_dir`.
std::vector<std::vector<RunRecord>> load_records(const std::filesystem::path& runs_dir);

// Dedup over two embedding files; writes the JSON report to `out`.
dedup::DedupReport dedup_command(const std::string& train_embeddings,
                                 const std::string& test_embeddings, double eta,
                                 dedup::Metric metric, const std::string& out);

void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace peerlearn::harness
