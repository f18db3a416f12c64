#include "peerlearn/noisy_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "peerlearn/detail/csv.hpp"
#include "peerlearn/detail/rounding.hpp"
#include "peerlearn/errors.hpp"
#include "peerlearn/seeding.hpp"

namespace peerlearn::data {

namespace {

void check_rate(double rate, const char* field) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("rate must lie in [0, 1)", field);
}

std::vector<std::vector<double>> class_centers(std::size_t num_classes, std::size_t dim,
                                               double separation, std::mt19937_64& rng) {
    std::vector<std::vector<double>> centers(num_classes, std::vector<double>(dim, 0.0));
    if (2 * dim >= num_classes) {
        for (std::size_t c = 0; c < num_classes; ++c) {
            centers[c][c % dim] = c < dim ? separation : -separation;
        }
        return centers;
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& center : centers) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& v : center) {
                v = gauss(rng);
                norm += v * v;
            }
        } while (norm == 0.0);
        const double scale = separation / std::sqrt(norm);
        for (double& v : center) v *= scale;
    }
    return centers;
}

std::uint64_t next_id(std::span<const Sample> samples) {
    std::uint64_t id = 0;
    for (const Sample& s : samples) id = std::max(id, s.id + 1);
    return id;
}

}  // namespace

Dataset::Dataset(std::size_t num_classes, std::size_t dim, std::vector<Sample> samples)
    : num_classes_(num_classes), dim_(dim), samples_(std::move(samples)),
      class_counts_(num_classes, 0) {
    if (num_classes == 0) throw ConfigError("a dataset needs at least one class");
    for (const Sample& s : samples_) {
        if (s.observed_label >= num_classes || s.clean_label >= num_classes) {
            throw LabelError("sample " + std::to_string(s.id) + " has a label outside [0, " +
                             std::to_string(num_classes) + ")");
        }
        if (s.features.size() != dim) {
            throw ShapeError("sample " + std::to_string(s.id) + " has " +
                             std::to_string(s.features.size()) + " features, expected " +
                             std::to_string(dim));
        }
        ++class_counts_[s.observed_label];
    }
}

std::size_t Dataset::in_domain_count() const {
    return static_cast<std::size_t>(std::count_if(
        samples_.begin(), samples_.end(), [](const Sample& s) { return !s.is_out_of_domain; }));
}

FlipModel parse_flip_model(std::string_view name) {
    if (name == "symmetric") return FlipModel::symmetric;
    if (name == "pairwise") return FlipModel::pairwise;
    throw ConfigError("unknown flip model '" + std::string(name) + "'");
}

std::string_view to_string(FlipModel f) {
    return f == FlipModel::symmetric ? "symmetric" : "pairwise";
}

void NoiseSpec::validate() const {
    check_rate(cross_category_rate, "cross_category_rate");
    check_rate(cross_domain_rate, "cross_domain_rate");
    if (!(cross_category_rate + cross_domain_rate < 1.0)) {
        throw ConfigError("cross_category_rate + cross_domain_rate must be < 1", "cross_domain_rate");
    }
    if (!(imbalance_factor >= 1.0) || !std::isfinite(imbalance_factor)) {
        throw ConfigError("imbalance factor must be a finite number >= 1", "imbalance_factor");
    }
}

Dataset generate_gaussian_dataset(std::size_t num_classes, std::size_t per_class, std::size_t dim,
                                  double separation, std::uint64_t seed) {
    if (num_classes < 2) throw ConfigError("need at least 2 classes", "num_classes");
    if (per_class < 1) throw ConfigError("need at least 1 sample per class", "per_class");
    if (dim < 2) throw ConfigError("dimension must be >= 2", "dim");
    if (!(separation > 0.0) || !std::isfinite(separation)) {
        throw ConfigError("separation must be positive", "separation");
    }

    std::mt19937_64 rng(seed);
    const auto centers = class_centers(num_classes, dim, separation, rng);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Sample> samples;
    samples.reserve(num_classes * per_class);
    std::uint64_t id = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t k = 0; k < per_class; ++k) {
            Sample s;
            s.features.resize(dim);
            for (std::size_t j = 0; j < dim; ++j) s.features[j] = centers[c][j] + gauss(rng);
            s.observed_label = c;
            s.clean_label = c;
            s.id = id++;
            samples.push_back(std::move(s));
        }
    }
    return Dataset(num_classes, dim, std::move(samples));
}

Dataset inject_cross_category_noise(const Dataset& ds, double rate, FlipModel flip_model,
                                    std::uint64_t seed) {
    check_rate(rate, "cross_category_rate");
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!ds[i].is_out_of_domain) candidates.push_back(i);
    }
    const std::size_t n_flip =
        detail::floor_count(rate * static_cast<double>(candidates.size()));
    if (n_flip == 0) return ds;
    if (ds.num_classes() < 2) throw ConfigError("label flips need at least 2 classes");

    std::mt19937_64 rng(seed);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(n_flip);
    std::sort(candidates.begin(), candidates.end());

    std::vector<Sample> samples(ds.samples().begin(), ds.samples().end());
    const std::size_t classes = ds.num_classes();
    std::uniform_int_distribution<std::size_t> other(0, classes - 2);
    for (std::size_t i : candidates) {
        Sample& s = samples[i];
        if (flip_model == FlipModel::pairwise) {
            s.observed_label = (s.clean_label + 1) % classes;
        } else {
            std::size_t label = other(rng);
            if (label >= s.clean_label) ++label;
            s.observed_label = label;
        }
    }
    return Dataset(classes, ds.dim(), std::move(samples));
}

Dataset inject_cross_domain_noise(const Dataset& ds, double rate, std::uint64_t seed) {
    check_rate(rate, "cross_domain_rate");
    const std::size_t n_new =
        detail::ceil_count(rate * static_cast<double>(ds.size()) / (1.0 - rate));
    if (n_new == 0) return ds;

    std::vector<double> lo(ds.dim(), 0.0);
    std::vector<double> hi(ds.dim(), 0.0);
    bool seen = false;
    for (const Sample& s : ds.samples()) {
        if (s.is_out_of_domain) continue;
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            lo[j] = seen ? std::min(lo[j], s.features[j]) : s.features[j];
            hi[j] = seen ? std::max(hi[j], s.features[j]) : s.features[j];
        }
        seen = true;
    }
    if (!seen) throw ConfigError("cross-domain noise needs in-domain samples to size its box");

    std::vector<Sample> samples(ds.samples().begin(), ds.samples().end());
    samples.reserve(ds.size() + n_new);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> label(0, ds.num_classes() - 1);
    std::uint64_t id = next_id(ds.samples());
    for (std::size_t k = 0; k < n_new; ++k) {
        Sample s;
        s.features.resize(ds.dim());
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            const double mid = 0.5 * (lo[j] + hi[j]);
            const double half = 1.5 * (hi[j] - lo[j]);
            s.features[j] = mid + half * unit(rng);
        }
        s.observed_label = label(rng);
        s.clean_label = s.observed_label;
        s.is_out_of_domain = true;
        s.id = id++;
        samples.push_back(std::move(s));
    }
    return Dataset(ds.num_classes(), ds.dim(), std::move(samples));
}

Dataset apply_imbalance(const Dataset& ds, double factor, std::uint64_t seed) {
    if (!(factor >= 1.0) || !std::isfinite(factor)) {
        throw ConfigError("imbalance factor must be a finite number >= 1", "imbalance_factor");
    }
    const auto counts = ds.class_counts();
    if (factor == 1.0 || ds.num_classes() < 2 || ds.empty()) return ds;
    const std::size_t n_max = counts.front();
    if (!std::all_of(counts.begin(), counts.end(), [&](std::size_t n) { return n == n_max; })) {
        throw ConfigError("imbalance expects a balanced input dataset");
    }

    const std::size_t classes = ds.num_classes();
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds[i].observed_label].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<bool> keep(ds.size(), false);
    for (std::size_t c = 0; c < classes; ++c) {
        const double exponent = -static_cast<double>(c) / static_cast<double>(classes - 1);
        std::size_t target =
            detail::ceil_count(static_cast<double>(n_max) * std::pow(factor, exponent));
        target = std::clamp<std::size_t>(target, 1, n_max);
        auto& members = by_class[c];
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t k = 0; k < target; ++k) keep[members[k]] = true;
    }

    std::vector<Sample> samples;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (keep[i]) samples.push_back(ds[i]);
    }
    return Dataset(classes, ds.dim(), std::move(samples));
}

double imbalance_ratio(std::span<const std::size_t> class_counts) {
    if (class_counts.empty()) throw UndefinedRatioError("no classes");
    const auto [lo, hi] = std::minmax_element(class_counts.begin(), class_counts.end());
    if (*lo == 0) throw UndefinedRatioError("a class has no samples");
    return static_cast<double>(*hi) / static_cast<double>(*lo);
}

double imbalance_ratio(const Dataset& ds) { return imbalance_ratio(ds.class_counts()); }

Dataset merge_datasets(const Dataset& a, const Dataset& b) {
    if (a.num_classes() != b.num_classes()) {
        throw ConfigError("cannot merge datasets with " + std::to_string(a.num_classes()) +
                          " and " + std::to_string(b.num_classes()) + " classes");
    }
    if (!a.empty() && !b.empty() && a.dim() != b.dim()) {
        throw ShapeError("cannot merge datasets of dimension " + std::to_string(a.dim()) + " and " +
                         std::to_string(b.dim()));
    }
    std::vector<Sample> samples;
    samples.reserve(a.size() + b.size());
    samples.insert(samples.end(), a.samples().begin(), a.samples().end());
    samples.insert(samples.end(), b.samples().begin(), b.samples().end());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i].id = i;
    const std::size_t dim = a.empty() ? b.dim() : a.dim();
    return Dataset(a.num_classes(), dim, std::move(samples));
}

Dataset apply_noise(const Dataset& clean, const NoiseSpec& spec) {
    spec.validate();
    Dataset ds = apply_imbalance(clean, spec.imbalance_factor, derive_seed(spec.seed, 1));
    ds = inject_cross_category_noise(ds, spec.cross_category_rate, spec.flip_model,
                                     derive_seed(spec.seed, 2));
    return inject_cross_domain_noise(ds, spec.cross_domain_rate, derive_seed(spec.seed, 3));
}

void write_dataset(std::ostream& out, const Dataset& ds) {
    std::string line;
    out << ds.num_classes() << ',' << ds.dim() << ',' << ds.size() << '\n';
    for (const Sample& s : ds.samples()) {
        line.clear();
        line += std::to_string(s.id);
        line += ',';
        line += std::to_string(s.observed_label);
        line += ',';
        line += std::to_string(s.clean_label);
        line += s.is_out_of_domain ? ",1" : ",0";
        for (double f : s.features) {
            line += ',';
            detail::append_double(line, f);
        }
        line += '\n';
        out << line;
    }
}

Dataset read_dataset(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ParseError("missing header", line_no);
    const auto header = detail::split_fields(line);
    if (header.size() != 3) throw ParseError("header must be num_classes,dim,count", line_no);
    const std::size_t classes = detail::parse_uint(header[0], line_no);
    const std::size_t dim = detail::parse_uint(header[1], line_no);
    const std::size_t count = detail::parse_uint(header[2], line_no);
    if (classes == 0) throw ParseError("num_classes must be >= 1", line_no);

    std::vector<Sample> samples;
    samples.reserve(count);
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != 4 + dim) {
            throw ParseError("expected " + std::to_string(4 + dim) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        Sample s;
        s.id = detail::parse_uint(fields[0], line_no);
        s.observed_label = detail::parse_uint(fields[1], line_no);
        s.clean_label = detail::parse_uint(fields[2], line_no);
        const auto ood = detail::parse_uint(fields[3], line_no);
        if (ood > 1) throw ParseError("is_ood must be 0 or 1", line_no);
        s.is_out_of_domain = ood == 1;
        if (s.observed_label >= classes || s.clean_label >= classes) {
            throw ParseError("label outside [0, " + std::to_string(classes) + ")", line_no);
        }
        s.features.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) s.features[j] = detail::parse_double(fields[4 + j], line_no);
        samples.push_back(std::move(s));
    }
    if (samples.size() != count) {
        throw ParseError("header announces " + std::to_string(count) + " rows, found " +
                             std::to_string(samples.size()),
                         line_no);
    }
    return Dataset(classes, dim, std::move(samples));
}

void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_dataset(out, ds);
    if (!out) throw IoError("failed writing '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_dataset(in);
}

}  // namespace peerlearn::data
