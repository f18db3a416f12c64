#include "peerlearn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "peerlearn/detail/csv.hpp"
#include "peerlearn/errors.hpp"
#include "peerlearn/seeding.hpp"

namespace peerlearn::harness {

namespace {

using Json = nlohmann::ordered_json;
namespace pt = boost::property_tree;

// Sub-seed streams.
constexpr std::uint64_t kDataStream = 11;
constexpr std::uint64_t kNoiseStream = 12;
constexpr std::uint64_t kInitH1Stream = 21;
constexpr std::uint64_t kInitH2Stream = 22;
constexpr std::uint64_t kShuffleStream = 31;

template <typename Fn>
void with_prefix(const std::string& section, Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        if (e.field().empty()) throw ConfigError(e.what(), section);
        throw ConfigError(std::string(e.what()).substr(e.field().size() + 2),
                          section + "." + e.field());
    }
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"dataset",
         {"num_classes", "train_per_class", "test_per_class", "dim", "separation", "train_file",
          "test_file"}},
        {"noise", {"cross_category_rate", "flip_model", "cross_domain_rate", "imbalance_factor"}},
        {"model", {"hidden", "activation"}},
        {"strategy", {"kind", "xi", "t_k", "learning_rate", "smoothing", "reduction"}},
        {"training", {"epochs", "batch_size", "seeds"}},
        {"output", {"path"}},
    };
    return keys;
}

std::string full_double(double v) {
    std::string s;
    detail::append_double(s, v);
    return s;
}

std::uint64_t parse_u64_field(const std::string& text, const std::string& field) {
    try {
        return detail::parse_uint(text, 0);
    } catch (const ParseError&) {
        throw ConfigError("expected a non-negative integer, got '" + text + "'", field);
    }
}

double parse_double_field(const std::string& text, const std::string& field) {
    try {
        return detail::parse_double(text, 0);
    } catch (const ParseError&) {
        throw ConfigError("expected a number, got '" + text + "'", field);
    }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& field) {
    std::vector<T> out;
    if (detail::trim(text).empty()) return out;
    for (std::string_view item : detail::split_fields(text)) {
        out.push_back(static_cast<T>(parse_u64_field(std::string(detail::trim(item)), field)));
    }
    return out;
}

template <typename Parse>
auto parse_enum_field(const std::string& text, const std::string& field, Parse&& parse) {
    try {
        return parse(text);
    } catch (const ConfigError& e) {
        throw ConfigError(e.what(), field);
    }
}

template <typename T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_from(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. Results
// are written by index, so ordering never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    with_prefix("dataset", [&] {
        const bool from_files = !dataset.train_file.empty() || !dataset.test_file.empty();
        if (from_files && (dataset.train_file.empty() || dataset.test_file.empty())) {
            throw ConfigError("train_file and test_file must be given together", "train_file");
        }
        if (from_files) return;
        if (dataset.num_classes < 2) throw ConfigError("need at least 2 classes", "num_classes");
        if (dataset.train_per_class < 1) throw ConfigError("must be >= 1", "train_per_class");
        if (dataset.test_per_class < 1) throw ConfigError("must be >= 1", "test_per_class");
        if (dataset.dim < 2) throw ConfigError("must be >= 2", "dim");
        if (!(dataset.separation > 0.0)) throw ConfigError("must be positive", "separation");
    });
    with_prefix("noise", [&] { noise.validate(); });
    with_prefix("model", [&] {
        for (std::size_t h : model.hidden) {
            if (h == 0) throw ConfigError("hidden widths must be >= 1", "hidden");
        }
    });
    with_prefix("strategy", [&] { strategy.validate(); });
    with_prefix("training", [&] {
        if (epochs < 1) throw ConfigError("need at least one epoch", "epochs");
        if (batch_size < 2) throw ConfigError("must be >= 2", "batch_size");
        if (seeds.empty()) throw ConfigError("need at least one seed", "seeds");
    });
}

std::vector<std::size_t> ExperimentConfig::layer_dims() const {
    std::vector<std::size_t> dims{dataset.dim};
    dims.insert(dims.end(), model.hidden.begin(), model.hidden.end());
    dims.push_back(dataset.num_classes);
    return dims;
}

ExperimentConfig canonical_config(StrategyKind kind) {
    ExperimentConfig cfg;
    cfg.strategy.kind = kind;
    return cfg;
}

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(e.message(), e.line());
    }

    const auto& keys = known_keys();
    for (const auto& [section, body] : tree) {
        const auto it = keys.find(section);
        if (it == keys.end() || body.data() != "") {
            throw ConfigError("unknown section", section);
        }
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) throw ConfigError("unknown key", section + "." + key);
        }
    }

    ExperimentConfig cfg;
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) {
            return std::string(detail::trim(*v));
        }
        return std::nullopt;
    };
    auto get_size = [&](const std::string& path, std::size_t& dst) {
        if (auto v = get(path)) dst = parse_u64_field(*v, path);
    };
    auto get_double = [&](const std::string& path, double& dst) {
        if (auto v = get(path)) dst = parse_double_field(*v, path);
    };

    get_size("dataset.num_classes", cfg.dataset.num_classes);
    get_size("dataset.train_per_class", cfg.dataset.train_per_class);
    get_size("dataset.test_per_class", cfg.dataset.test_per_class);
    get_size("dataset.dim", cfg.dataset.dim);
    get_double("dataset.separation", cfg.dataset.separation);
    if (auto v = get("dataset.train_file")) cfg.dataset.train_file = *v;
    if (auto v = get("dataset.test_file")) cfg.dataset.test_file = *v;

    get_double("noise.cross_category_rate", cfg.noise.cross_category_rate);
    if (auto v = get("noise.flip_model")) {
        cfg.noise.flip_model = parse_enum_field(*v, "noise.flip_model", data::parse_flip_model);
    }
    get_double("noise.cross_domain_rate", cfg.noise.cross_domain_rate);
    get_double("noise.imbalance_factor", cfg.noise.imbalance_factor);

    if (auto v = get("model.hidden")) cfg.model.hidden = parse_list<std::size_t>(*v, "model.hidden");
    if (auto v = get("model.activation")) {
        cfg.model.activation = parse_enum_field(*v, "model.activation", nn::parse_activation);
    }

    if (auto v = get("strategy.kind")) {
        cfg.strategy.kind = parse_enum_field(*v, "strategy.kind", parse_strategy);
    }
    get_double("strategy.xi", cfg.strategy.schedule.xi);
    get_size("strategy.t_k", cfg.strategy.schedule.t_k);
    get_double("strategy.learning_rate", cfg.strategy.optimizer.learning_rate);
    get_double("strategy.smoothing", cfg.strategy.loss_cfg.smoothing);
    if (auto v = get("strategy.reduction")) {
        cfg.strategy.loss_cfg.reduction =
            parse_enum_field(*v, "strategy.reduction", nn::parse_reduction);
    }

    get_size("training.epochs", cfg.epochs);
    get_size("training.batch_size", cfg.batch_size);
    if (auto v = get("training.seeds")) cfg.seeds = parse_list<std::uint64_t>(*v, "training.seeds");

    if (auto v = get("output.path")) cfg.output_path = *v;

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    return parse_config(in);
}

std::string config_to_ini(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "[dataset]\n"
       << "num_classes = " << cfg.dataset.num_classes << '\n'
       << "train_per_class = " << cfg.dataset.train_per_class << '\n'
       << "test_per_class = " << cfg.dataset.test_per_class << '\n'
       << "dim = " << cfg.dataset.dim << '\n'
       << "separation = " << full_double(cfg.dataset.separation) << '\n';
    if (!cfg.dataset.train_file.empty()) os << "train_file = " << cfg.dataset.train_file << '\n';
    if (!cfg.dataset.test_file.empty()) os << "test_file = " << cfg.dataset.test_file << '\n';
    os << "\n[noise]\n"
       << "cross_category_rate = " << full_double(cfg.noise.cross_category_rate) << '\n'
       << "flip_model = " << data::to_string(cfg.noise.flip_model) << '\n'
       << "cross_domain_rate = " << full_double(cfg.noise.cross_domain_rate) << '\n'
       << "imbalance_factor = " << full_double(cfg.noise.imbalance_factor) << '\n'
       << "\n[model]\n"
       << "hidden = " << join(cfg.model.hidden) << '\n'
       << "activation = " << nn::to_string(cfg.model.activation) << '\n'
       << "\n[strategy]\n"
       << "kind = " << to_string(cfg.strategy.kind) << '\n'
       << "xi = " << full_double(cfg.strategy.schedule.xi) << '\n'
       << "t_k = " << cfg.strategy.schedule.t_k << '\n'
       << "learning_rate = " << full_double(cfg.strategy.optimizer.learning_rate) << '\n'
       << "smoothing = " << full_double(cfg.strategy.loss_cfg.smoothing) << '\n'
       << "reduction = " << nn::to_string(cfg.strategy.loss_cfg.reduction) << '\n'
       << "\n[training]\n"
       << "epochs = " << cfg.epochs << '\n'
       << "batch_size = " << cfg.batch_size << '\n'
       << "seeds = " << join(cfg.seeds) << '\n';
    if (!cfg.output_path.empty()) os << "\n[output]\npath = " << cfg.output_path << '\n';
    return os.str();
}

SeedData make_seed_data(const ExperimentConfig& cfg, std::uint64_t seed) {
    const DatasetSpec& spec = cfg.dataset;
    if (!spec.train_file.empty()) {
        SeedData out{data::load_dataset(spec.train_file), data::load_dataset(spec.test_file)};
        if (out.train.num_classes() != out.test.num_classes() || out.train.dim() != out.test.dim()) {
            throw ConfigError("train and test files disagree on classes or dimension",
                              "dataset.test_file");
        }
        return out;
    }
    const auto pool =
        data::generate_gaussian_dataset(spec.num_classes, spec.train_per_class + spec.test_per_class,
                                        spec.dim, spec.separation, derive_seed(seed, kDataStream));
    std::vector<data::Sample> train;
    std::vector<data::Sample> test;
    std::vector<std::size_t> seen(spec.num_classes, 0);
    for (const auto& s : pool.samples()) {
        (seen[s.clean_label]++ < spec.train_per_class ? train : test).push_back(s);
    }
    data::NoiseSpec noise = cfg.noise;
    noise.seed = derive_seed(seed, kNoiseStream);
    return SeedData{data::apply_noise(data::Dataset(spec.num_classes, spec.dim, std::move(train)), noise),
                    data::Dataset(spec.num_classes, spec.dim, std::move(test))};
}

ModelSpec model_spec(const ExperimentConfig& cfg, std::uint64_t seed) {
    return ModelSpec{cfg.layer_dims(), cfg.model.activation, derive_seed(seed, kInitH1Stream),
                     derive_seed(seed, kInitH2Stream)};
}

std::uint64_t shuffle_seed(std::uint64_t seed) { return derive_seed(seed, kShuffleStream); }

RunRecord run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    const SeedData data = make_seed_data(cfg, seed);
    StrategyConfig strategy = cfg.strategy;
    strategy.optimizer.seed = seed;
    ExperimentConfig sized = cfg;
    sized.dataset.dim = data.train.dim();
    sized.dataset.num_classes = data.train.num_classes();
    RunRecord record = train_strategy(strategy, model_spec(sized, seed), data.train, data.test,
                                      cfg.epochs, cfg.batch_size, shuffle_seed(seed));
    record.seed = seed;
    return record;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<RunRecord> records(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), [&](std::size_t i) { records[i] = run_seed(cfg, cfg.seeds[i]); });
    if (!cfg.output_path.empty()) {
        write_records(std::filesystem::path(cfg.output_path) / std::string(to_string(cfg.strategy.kind)),
                      records);
    }
    return records;
}

StrategySummary summarize(const std::vector<RunRecord>& records) {
    StrategySummary s;
    if (records.empty()) return s;
    s.strategy = records.front().strategy;
    for (const RunRecord& r : records) {
        s.seeds.push_back(r.seed);
        s.final_accuracy.push_back(r.summary.best_test_accuracy);
    }
    const double n = static_cast<double>(s.final_accuracy.size());
    double sum = 0.0;
    for (double a : s.final_accuracy) sum += a;
    s.mean = sum / n;
    if (s.final_accuracy.size() > 1) {
        double sq = 0.0;
        for (double a : s.final_accuracy) sq += (a - s.mean) * (a - s.mean);
        s.stddev = std::sqrt(sq / (n - 1.0));
    }
    return s;
}

ComparisonTable build_comparison(std::vector<std::vector<RunRecord>> per_strategy) {
    ComparisonTable table;
    for (const auto& records : per_strategy) table.rows.push_back(summarize(records));
    for (std::size_t a = 0; a < table.rows.size(); ++a) {
        for (std::size_t b = 0; b < table.rows.size(); ++b) {
            if (a == b) continue;
            const auto& ra = table.rows[a];
            const auto& rb = table.rows[b];
            const std::size_t n = std::min(ra.final_accuracy.size(), rb.final_accuracy.size());
            for (std::size_t k = 0; k < n; ++k) {
                if (ra.final_accuracy[k] > rb.final_accuracy[k]) {
                    ++table.rows[a].wins;
                } else if (ra.final_accuracy[k] < rb.final_accuracy[k]) {
                    ++table.rows[a].losses;
                } else {
                    ++table.rows[a].ties;
                }
            }
        }
    }
    return table;
}

ComparisonTable compare_strategies(const std::vector<ExperimentConfig>& cfgs,
                                   const std::filesystem::path& output_dir) {
    if (cfgs.empty()) throw ConfigError("nothing to compare");
    for (const auto& cfg : cfgs) {
        cfg.validate();
        if (!(cfg.dataset == cfgs.front().dataset) || !(cfg.noise == cfgs.front().noise)) {
            throw ConfigError("all compared configs must share one dataset spec", "dataset");
        }
        if (cfg.seeds != cfgs.front().seeds) {
            throw ConfigError("all compared configs must share one seed list", "training.seeds");
        }
    }

    const std::size_t n_seeds = cfgs.front().seeds.size();
    std::vector<std::vector<RunRecord>> per_strategy(cfgs.size(), std::vector<RunRecord>(n_seeds));
    parallel_for(cfgs.size() * n_seeds, [&](std::size_t job) {
        const std::size_t c = job / n_seeds;
        const std::size_t k = job % n_seeds;
        per_strategy[c][k] = run_seed(cfgs[c], cfgs[c].seeds[k]);
    });

    if (!output_dir.empty()) {
        for (std::size_t c = 0; c < cfgs.size(); ++c) {
            // Two configs of the same kind land in separate, numbered folders.
            std::string name(to_string(cfgs[c].strategy.kind));
            for (std::size_t p = 0; p < c; ++p) {
                if (cfgs[p].strategy.kind == cfgs[c].strategy.kind) {
                    name += "_" + std::to_string(c);
                    break;
                }
            }
            write_records(output_dir / name, per_strategy[c]);
            write_text_file(output_dir / name / "config.ini", config_to_ini(cfgs[c]));
        }
    }
    ComparisonTable table = build_comparison(std::move(per_strategy));
    if (!output_dir.empty()) {
        write_text_file(output_dir / "comparison.csv", comparison_csv(table));
        write_text_file(output_dir / "comparison.txt", comparison_text(table));
    }
    return table;
}

std::string comparison_csv(const ComparisonTable& table) {
    std::string out = "strategy,seeds,mean_accuracy,std_accuracy,wins,losses,ties\n";
    for (const auto& row : table.rows) {
        out += row.strategy + ',' + std::to_string(row.seeds.size()) + ',' + full_double(row.mean) +
               ',' + full_double(row.stddev) + ',' + std::to_string(row.wins) + ',' +
               std::to_string(row.losses) + ',' + std::to_string(row.ties) + '\n';
    }
    return out;
}

std::string comparison_text(const ComparisonTable& table) {
    std::ostringstream os;
    os << std::left << std::setw(16) << "strategy" << std::setw(22) << "test accuracy (%)"
       << std::setw(7) << "wins" << std::setw(8) << "losses" << "ties\n";
    for (const auto& row : table.rows) {
        const std::string acc = fixed(100.0 * row.mean, 2) + " +/- " + fixed(100.0 * row.stddev, 2);
        os << std::left << std::setw(16) << row.strategy << std::setw(22) << acc << std::setw(7)
           << row.wins << std::setw(8) << row.losses << row.ties << '\n';
    }
    return os.str();
}

std::string record_to_jsonl(const RunRecord& record) {
    std::string out;
    for (const EpochRow& row : record.rows) {
        Json j;
        j["type"] = "epoch";
        j["strategy"] = record.strategy;
        j["seed"] = record.seed;
        j["epoch"] = row.epoch;
        j["drop_rate"] = row.drop_rate;
        j["train_acc_h1"] = row.train_acc_h1;
        j["train_acc_h2"] = optional_json(row.train_acc_h2);
        j["test_acc_h1"] = row.test_acc_h1;
        j["test_acc_h2"] = optional_json(row.test_acc_h2);
        j["selection_label_precision"] = optional_json(row.selection_label_precision);
        j["mean_agree"] = optional_json(row.mean_agree);
        j["mean_disagree"] = optional_json(row.mean_disagree);
        j["skipped_updates"] = row.skipped_updates;
        out += j.dump();
        out += '\n';
    }
    Json s;
    s["type"] = "summary";
    s["strategy"] = record.strategy;
    s["seed"] = record.seed;
    s["best_test_accuracy"] = record.summary.best_test_accuracy;
    s["best_network"] = record.summary.best_network;
    out += s.dump();
    out += '\n';
    return out;
}

RunRecord record_from_jsonl(std::string_view text) {
    RunRecord record;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool have_summary = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            const Json j = Json::parse(line);
            record.strategy = j.at("strategy").get<std::string>();
            record.seed = j.at("seed").get<std::uint64_t>();
            const auto type = j.at("type").get<std::string>();
            if (type == "summary") {
                record.summary.best_test_accuracy = j.at("best_test_accuracy").get<double>();
                record.summary.best_network = j.at("best_network").get<std::string>();
                have_summary = true;
                continue;
            }
            if (type != "epoch") throw ParseError("unknown row type '" + type + "'", line_no);
            EpochRow row;
            row.epoch = j.at("epoch").get<std::size_t>();
            row.drop_rate = j.at("drop_rate").get<double>();
            row.train_acc_h1 = j.at("train_acc_h1").get<double>();
            row.train_acc_h2 = optional_from(j, "train_acc_h2");
            row.test_acc_h1 = j.at("test_acc_h1").get<double>();
            row.test_acc_h2 = optional_from(j, "test_acc_h2");
            row.selection_label_precision = optional_from(j, "selection_label_precision");
            row.mean_agree = optional_from(j, "mean_agree");
            row.mean_disagree = optional_from(j, "mean_disagree");
            row.skipped_updates = j.at("skipped_updates").get<std::size_t>();
            record.rows.push_back(row);
        } catch (const Json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    if (!have_summary) finalize_summary(record);
    return record;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string seeds_csv(const StrategySummary& summary) {
    std::string out = "strategy,seed,final_test_accuracy\n";
    for (std::size_t k = 0; k < summary.seeds.size(); ++k) {
        out += summary.strategy + ',' + std::to_string(summary.seeds[k]) + ',' +
               full_double(summary.final_accuracy[k]) + '\n';
    }
    return out;
}

std::string aggregate_csv(const StrategySummary& summary) {
    return "strategy,seeds,mean_accuracy,std_accuracy\n" + summary.strategy + ',' +
           std::to_string(summary.seeds.size()) + ',' + full_double(summary.mean) + ',' +
           full_double(summary.stddev) + '\n';
}

void write_records(const std::filesystem::path& dir, const std::vector<RunRecord>& records) {
    for (const RunRecord& r : records) {
        write_text_file(dir / ("seed_" + std::to_string(r.seed) + ".jsonl"), record_to_jsonl(r));
    }
    const StrategySummary summary = summarize(records);
    write_text_file(dir / "summary.csv", seeds_csv(summary));
    write_text_file(dir / "aggregate.csv", aggregate_csv(summary));
}

std::vector<std::vector<RunRecord>> load_records(const std::filesystem::path& runs_dir) {
    if (!std::filesystem::is_directory(runs_dir)) {
        throw IoError("'" + runs_dir.string() + "' is not a directory");
    }
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
        if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());

    std::vector<std::vector<RunRecord>> out;
    for (const auto& dir : dirs) {
        std::vector<RunRecord> records;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            const auto name = entry.path().filename().string();
            if (name.rfind("seed_", 0) != 0 || entry.path().extension() != ".jsonl") continue;
            std::ifstream in(entry.path(), std::ios::binary);
            std::stringstream buf;
            buf << in.rdbuf();
            try {
                records.push_back(record_from_jsonl(buf.str()));
            } catch (const ParseError& e) {
                throw ParseError(entry.path().string() + ": " + e.what(), e.line());
            }
        }
        if (records.empty()) continue;
        std::sort(records.begin(), records.end(),
                  [](const RunRecord& a, const RunRecord& b) { return a.seed < b.seed; });
        out.push_back(std::move(records));
    }
    // Canonical strategy order first, anything else by name.
    auto rank = [](const std::string& name) {
        try {
            return static_cast<int>(parse_strategy(name));
        } catch (const ConfigError&) {
            return 100;
        }
    };
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
        return rank(a.front().strategy) < rank(b.front().strategy);
    });
    return out;
}

dedup::DedupReport dedup_command(const std::string& train_embeddings,
                                 const std::string& test_embeddings, double eta,
                                 dedup::Metric metric, const std::string& out) {
    const auto train = dedup::load_embeddings(train_embeddings);
    const auto test = dedup::load_embeddings(test_embeddings);
    const auto report = dedup::deduplicate(train, test, dedup::DedupConfig{eta, metric});
    if (!out.empty()) write_text_file(out, dedup::report_to_json(report));
    return report;
}

}  // namespace peerlearn::harness
