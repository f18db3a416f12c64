// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any of them fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "peerlearn/harness.hpp"
#include "test_util.hpp"

using namespace peerlearn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::ostringstream line;
    line << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << std::fixed;
    line.precision(1);
    line << secs << " s]";
    std::cout << line.str() << std::endl;
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed;
    os.precision(digits);
    os << v;
    return os.str();
}

fs::path scratch_dir(const std::string& tag) {
    const auto p = fs::temp_directory_path() / ("peerlearn_acceptance_" + std::to_string(::getpid()) + "_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
    }
    return out;
}

Outcome schedule_exactness() {
    double worst = 0.0;
    std::size_t n = 0;
    for (double xi : {0.0, 0.3, 0.35, 0.7}) {
        for (std::size_t tk : {1u, 10u}) {
            for (std::size_t t = 0; t <= 3 * tk; ++t) {
                const double want = xi * std::min(static_cast<double>(t) / static_cast<double>(tk), 1.0);
                worst = std::max(worst, std::abs(drop_rate({xi, tk}, t) - want));
                ++n;
            }
        }
    }
    return {worst <= 1e-15, std::to_string(n) + " (xi, T_k, T) points, max |error| " + fmt(worst, 17)};
}

Outcome gradient_oracle() {
    std::mt19937_64 rng(20240501);
    int pairs = 0, resampled = 0;
    double worst = 0.0;
    while (pairs < 50) {
        const auto dims = testutil::random_dims(rng);
        const nn::Activation act = pairs % 2 ? nn::Activation::tanh : nn::Activation::relu;
        const nn::Model m = nn::init_model(dims, rng(), act);
        std::vector<testutil::RefExample> batch;
        const std::size_t size = 1 + rng() % 8;
        for (std::size_t i = 0; i < size; ++i) {
            batch.push_back({testutil::random_vector(rng, dims.front()), rng() % dims.back()});
        }
        // A ReLU kink within the finite-difference step is not a gradient
        // error; draw another pair.
        if (act == nn::Activation::relu && testutil::min_hidden_margin(m, batch) < 1e-3) {
            ++resampled;
            continue;
        }
        const nn::LossConfig cfg{pairs % 5 == 0 ? 0.1 : 0.0,
                                 pairs % 3 == 0 ? nn::Reduction::sum : nn::Reduction::mean};
        std::vector<nn::Example> ex;
        for (const auto& e : batch) ex.push_back({e.x, e.y});
        const auto g = nn::gradient(m, ex, cfg);
        const auto fd = testutil::fd_gradient(m, batch, cfg, 1e-5);
        for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, testutil::relative_error(g[i], fd[i]));
        ++pairs;
    }
    return {worst <= 1e-4, "50 pairs, max relative error " + fmt(worst * 1e6, 3) + "e-6 (" +
                               std::to_string(resampled) + " kink draws resampled)"};
}

Outcome selection_oracle() {
    std::mt19937_64 rng(777);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t batch = 1 + rng() % 20;
        std::vector<double> losses(batch);
        for (double& l : losses) {
            l = trial % 4 == 0 ? static_cast<double>(rng() % 3) * 0.5
                               : std::uniform_real_distribution<double>(0.0, 4.0)(rng);
        }
        IndexList cands;
        for (std::size_t i = 0; i < batch; ++i) {
            if (rng() % 3 != 0 && cands.size() < 12) cands.push_back(i);
        }
        std::shuffle(cands.begin(), cands.end(), rng);
        const double d = std::uniform_real_distribution<double>(0.0, 0.95)(rng);
        if (select_small_loss(losses, cands, d) != oracle::exhaustive_select(losses, cands, d)) ++mismatches;
    }
    return {mismatches == 0, "200 instances, |G_s| <= 12, " + std::to_string(mismatches) + " mismatches"};
}

Outcome dedup_oracle() {
    std::mt19937_64 rng(4242);
    int mismatches = 0, non_monotone = 0;
    std::size_t removed_total = 0;
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t dim = 2 + rng() % 6;
        const std::size_t classes = 1 + rng() % 5;
        auto make = [&](std::size_t n, std::uint64_t first) {
            dedup::EmbeddingSet s(dim);
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> v(dim);
                for (double& x : v) x = g(rng);
                s.add(first + i, rng() % classes, v);
            }
            return s;
        };
        const auto train = make(1 + rng() % 100, 0);
        const auto test = make(1 + rng() % 100, 100000);
        const dedup::Metric metric = trial % 3 == 2 ? dedup::Metric::cosine_distance : dedup::Metric::euclidean;
        const double eta = std::uniform_real_distribution<double>(0.0, 0.1)(rng);
        const auto got = dedup::deduplicate(train, test, {eta, metric}).removed_ids;
        if (got != oracle::brute_force_dedup(train, test, eta, metric)) ++mismatches;
        removed_total += got.size();
        std::vector<std::uint64_t> prev;
        for (double e = 0.0; e <= 0.1 + 1e-12; e += 0.01) {
            const auto cur = dedup::deduplicate(train, test, {e, metric}).removed_ids;
            if (!std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) ++non_monotone;
            prev = cur;
        }
    }
    return {mismatches == 0 && non_monotone == 0 && removed_total > 0,
            "100 instances, " + std::to_string(mismatches) + " mismatches, " +
                std::to_string(non_monotone) + " non-monotone steps, " + std::to_string(removed_total) +
                " removals checked"};
}

Outcome cross_update_contract() {
    std::mt19937_64 rng(31337);
    int violations = 0;
    std::string first;
    std::size_t with_disagreement = 0, with_drop = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t dim = 2 + rng() % 5;
        const std::size_t classes = 2 + rng() % 4;
        const std::uint64_t s1 = rng();
        PeerTrainer t = make_peer_trainer({dim, 3 + rng() % 6, classes}, nn::Activation::relu, s1, s1 + 1,
                                          {std::uniform_real_distribution<double>(0.0, 0.9)(rng), 1 + rng() % 10},
                                          {0.05 + 0.1 * static_cast<double>(rng() % 5), 0}, {});
        t.epoch = rng() % 15;
        const auto samples = testutil::random_samples(rng, 1 + rng() % 64, dim, classes);
        const auto err = oracle::check_cross_update(t, samples);
        if (!err.empty()) {
            if (first.empty()) first = err;
            ++violations;
        }
        const auto r = peer_step(t, samples).report;
        with_disagreement += !r.split.disagree_idx.empty();
        with_drop += r.selection.keep_for_h1.size() < r.split.agree_idx.size();
    }
    return {violations == 0, "1000 batches (" + std::to_string(with_disagreement) + " with G_d, " +
                                 std::to_string(with_drop) + " with drops), " + std::to_string(violations) +
                                 " violations" + (first.empty() ? "" : "; first: " + first)};
}

struct NoisyRuns {
    std::map<std::string, harness::StrategySummary> summary;
    std::vector<double> peer_precision;
};

NoisyRuns run_canonical() {
    const auto dir = scratch_dir("canonical");
    std::vector<harness::ExperimentConfig> cfgs;
    for (auto k : {StrategyKind::plain, StrategyKind::decoupling, StrategyKind::co_teaching,
                   StrategyKind::peer_learning}) {
        cfgs.push_back(harness::canonical_config(k));
    }
    const auto start = std::chrono::steady_clock::now();
    const auto table = harness::compare_strategies(cfgs, dir);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "canonical sweep (4 strategies x 5 seeds) took " << fmt(secs, 1) << " s\n"
              << harness::comparison_text(table);
    NoisyRuns out;
    for (const auto& row : table.rows) out.summary[row.strategy] = row;
    for (const auto& records : harness::load_records(dir)) {
        if (records.front().strategy != "peer_learning") continue;
        for (const auto& r : records) out.peer_precision.push_back(r.rows.back().selection_label_precision.value_or(0.0));
    }
    fs::remove_all(dir);
    return out;
}

Outcome noise_robustness(const NoisyRuns& runs) {
    const double peer = 100.0 * runs.summary.at("peer_learning").mean;
    const double plain = 100.0 * runs.summary.at("plain").mean;
    const double dec = 100.0 * runs.summary.at("decoupling").mean;
    const double cot = 100.0 * runs.summary.at("co_teaching").mean;
    const bool ok = peer - plain >= 5.0 && peer >= dec - 1.0 && peer >= cot - 1.0;
    return {ok, "peer " + fmt(peer, 2) + ", plain " + fmt(plain, 2) + ", decoupling " + fmt(dec, 2) +
                    ", co_teaching " + fmt(cot, 2) + " (need peer-plain >= 5, peer >= others - 1)"};
}

Outcome memorization(const NoisyRuns& runs) {
    double sum = 0.0, lo = 1.0;
    for (double p : runs.peer_precision) {
        sum += p;
        lo = std::min(lo, p);
    }
    const double mean = runs.peer_precision.empty() ? 0.0 : sum / static_cast<double>(runs.peer_precision.size());
    return {runs.peer_precision.size() == 5 && mean >= 0.75,
            "mean final-epoch precision " + fmt(mean) + " over " + std::to_string(runs.peer_precision.size()) +
                " seeds (min " + fmt(lo) + "), clean fraction 0.6, threshold 0.75"};
}

Outcome clean_data_sanity() {
    std::vector<harness::ExperimentConfig> cfgs;
    for (auto k : {StrategyKind::plain, StrategyKind::decoupling, StrategyKind::co_teaching,
                   StrategyKind::peer_learning}) {
        auto cfg = harness::canonical_config(k);
        cfg.noise = {};
        cfg.dataset.separation = 8.0;
        cfgs.push_back(cfg);
    }
    const auto table = harness::compare_strategies(cfgs);
    double lo = 1.0, hi = 0.0;
    std::string detail;
    for (const auto& row : table.rows) {
        lo = std::min(lo, row.mean);
        hi = std::max(hi, row.mean);
        detail += row.strategy + " " + fmt(100.0 * row.mean, 2) + " ";
    }
    return {lo >= 0.99 && hi - lo <= 0.02, detail + "(need all >= 99 and spread <= 2 points)"};
}

Outcome imbalance_arithmetic() {
    const double r = data::imbalance_ratio(std::vector<std::size_t>{563, 4});
    return {r == 140.75 && std::round(r * 10.0) / 10.0 == 140.8, "ratio " + fmt(r, 6)};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PEERLEARN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
    const auto dir = scratch_dir("determinism");
    const auto ini = dir / "small.ini";
    std::ofstream(ini) << "[dataset]\nnum_classes = 4\ntrain_per_class = 80\ntest_per_class = 30\ndim = 6\n"
                          "[model]\nhidden = 24,24\n"
                          "[strategy]\nt_k = 3\n"
                          "[training]\nepochs = 6\nbatch_size = 32\nseeds = 1,2,3\n";
    const int a = run_cli("compare -c " + ini.string() + " -o " + (dir / "a").string());
    const int b = run_cli("compare -c " + ini.string() + " -o " + (dir / "b").string());
    if (a || b) return {false, "compare exited with " + std::to_string(a) + "/" + std::to_string(b)};
    const auto ta = tree_contents(dir / "a");
    const auto tb = tree_contents(dir / "b");
    std::size_t bytes = 0;
    for (const auto& [name, content] : ta) bytes += content.size();
    const bool same = ta == tb && ta.size() >= 4 * 5 + 2;
    fs::remove_all(dir);
    return {same, std::to_string(ta.size()) + " files, " + std::to_string(bytes) + " bytes, " +
                      (same ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
    report("schedule exactness", schedule_exactness);
    report("gradient oracle", gradient_oracle);
    report("selection oracle", selection_oracle);
    report("dedup oracle", dedup_oracle);
    report("cross-update contract", cross_update_contract);
    NoisyRuns runs;
    bool have_runs = false;
    std::string run_error;
    try {
        runs = run_canonical();
        have_runs = true;
    } catch (const std::exception& e) {
        run_error = e.what();
    }
    report("noise-robustness ordering", [&]() -> Outcome {
        if (!have_runs) return {false, "canonical runs failed: " + run_error};
        return noise_robustness(runs);
    });
    report("memorization avoidance", [&]() -> Outcome {
        if (!have_runs) return {false, "canonical runs failed: " + run_error};
        return memorization(runs);
    });
    report("clean-data sanity", clean_data_sanity);
    report("imbalance arithmetic", imbalance_arithmetic);
    report("determinism", determinism);
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
    return failures ? 1 : 0;
}
