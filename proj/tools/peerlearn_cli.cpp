// peerlearn: generate noisy datasets, train/compare strategies, re-render
// stored results, and deduplicate embedding sets.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "peerlearn/errors.hpp"
#include "peerlearn/harness.hpp"

namespace fs = std::filesystem;
using namespace peerlearn;

namespace {

harness::ExperimentConfig config_or_canonical(const std::string& path) {
    return path.empty() ? harness::canonical_config() : harness::load_config(path);
}

int run_generate(const std::string& config, std::uint64_t seed, const std::string& train_out,
                 const std::string& test_out) {
    const auto cfg = config_or_canonical(config);
    const auto data = harness::make_seed_data(cfg, seed);
    data::save_dataset(train_out, data.train);
    if (!test_out.empty()) data::save_dataset(test_out, data.test);
    std::cout << "wrote " << data.train.size() << " training samples to " << train_out << '\n';
    if (!test_out.empty()) {
        std::cout << "wrote " << data.test.size() << " test samples to " << test_out << '\n';
    }
    return 0;
}

int run_train(const std::string& config, const std::vector<std::uint64_t>& seeds,
              const std::string& strategy, const std::string& out) {
    auto cfg = config_or_canonical(config);
    if (!seeds.empty()) cfg.seeds = seeds;
    if (!strategy.empty()) cfg.strategy.kind = parse_strategy(strategy);
    if (!out.empty()) cfg.output_path = out;
    const auto records = harness::run_experiment(cfg);
    if (!cfg.output_path.empty()) {
        harness::write_text_file(fs::path(cfg.output_path) /
                                     std::string(to_string(cfg.strategy.kind)) / "config.ini",
                                 harness::config_to_ini(cfg));
    }
    const auto summary = harness::summarize(records);
    for (const auto& r : records) {
        std::cout << r.strategy << " seed " << r.seed << ": test accuracy "
                  << r.summary.best_test_accuracy << " (" << r.summary.best_network << ")\n";
    }
    std::cout << "mean " << summary.mean << " std " << summary.stddev << '\n';
    return 0;
}

int run_compare(const std::vector<std::string>& configs, const std::vector<std::string>& strategies,
                const std::string& out) {
    std::vector<harness::ExperimentConfig> cfgs;
    if (configs.size() <= 1) {
        const auto base = config_or_canonical(configs.empty() ? std::string{} : configs.front());
        std::vector<std::string> kinds = strategies;
        if (kinds.empty()) kinds = {"plain", "decoupling", "co_teaching", "peer_learning"};
        for (const auto& k : kinds) {
            auto cfg = base;
            cfg.strategy.kind = parse_strategy(k);
            cfgs.push_back(cfg);
        }
    } else {
        for (const auto& path : configs) cfgs.push_back(harness::load_config(path));
    }
    const auto table = harness::compare_strategies(cfgs, out);
    std::cout << harness::comparison_text(table);
    return 0;
}

int run_report(const std::string& runs, const std::string& out) {
    const auto table = harness::build_comparison(harness::load_records(runs));
    if (!out.empty()) harness::write_text_file(out, harness::comparison_csv(table));
    std::cout << harness::comparison_text(table);
    return 0;
}

int run_dedup(const std::string& train, const std::string& test, double eta,
              const std::string& metric, const std::string& out) {
    const auto report = harness::dedup_command(train, test, eta, dedup::parse_metric(metric), out);
    std::cout << "removed " << report.removed_ids.size() << " of "
              << report.removed_ids.size() + report.kept_ids.size() << " training items\n";
    if (out.empty()) std::cout << dedup::report_to_json(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noise-robust training with peer networks"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "Write a noisy training set (and clean test set)");
    std::string gen_config, gen_train, gen_test;
    std::uint64_t gen_seed = 1;
    gen->add_option("-c,--config", gen_config, "Experiment config (INI); canonical config if omitted");
    gen->add_option("-s,--seed", gen_seed, "Experiment seed");
    gen->add_option("--train", gen_train, "Output path for the training set")->required();
    gen->add_option("--test", gen_test, "Output path for the test set");

    auto* tr = app.add_subcommand("train", "Train one strategy over the configured seeds");
    std::string tr_config, tr_strategy, tr_out;
    std::vector<std::uint64_t> tr_seeds;
    tr->add_option("-c,--config", tr_config, "Experiment config (INI)");
    tr->add_option("--strategy", tr_strategy, "Override strategy kind");
    tr->add_option("-s,--seed", tr_seeds, "Override the seed list");
    tr->add_option("-o,--out", tr_out, "Output directory for run records");

    auto* cmp = app.add_subcommand("compare", "Train several strategies on identical data");
    std::vector<std::string> cmp_configs, cmp_strategies;
    std::string cmp_out;
    cmp->add_option("-c,--config", cmp_configs,
                    "One base config (expanded per --strategies) or several full configs");
    cmp->add_option("--strategies", cmp_strategies, "Strategy kinds to compare")->delimiter(',');
    cmp->add_option("-o,--out", cmp_out, "Output directory")->required();

    auto* rep = app.add_subcommand("report", "Re-render summaries from stored run records");
    std::string rep_runs, rep_out;
    rep->add_option("runs", rep_runs, "Directory written by train/compare")->required();
    rep->add_option("-o,--out", rep_out, "Write the comparison CSV here");

    auto* dd = app.add_subcommand("dedup", "Remove training embeddings too close to the test set");
    std::string dd_train, dd_test, dd_out, dd_metric = "euclidean";
    double dd_eta = 0.01;
    dd->add_option("--train", dd_train, "Training embeddings CSV")->required();
    dd->add_option("--test", dd_test, "Test embeddings CSV")->required();
    dd->add_option("--eta", dd_eta, "Threshold factor: remove below (1+eta)*theta");
    dd->add_option("--metric", dd_metric, "euclidean or cosine_distance");
    dd->add_option("-o,--out", dd_out, "JSON report path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return run_generate(gen_config, gen_seed, gen_train, gen_test);
        if (*tr) return run_train(tr_config, tr_seeds, tr_strategy, tr_out);
        if (*cmp) return run_compare(cmp_configs, cmp_strategies, cmp_out);
        if (*rep) return run_report(rep_runs, rep_out);
        if (*dd) return run_dedup(dd_train, dd_test, dd_eta, dd_metric, dd_out);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
