#include "peerlearn/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "peerlearn/detail/csv.hpp"
#include "peerlearn/errors.hpp"

namespace peerlearn::dedup {

namespace {

using Json = nlohmann::json;

std::map<std::size_t, std::vector<std::size_t>> group_by_label(const EmbeddingSet& set) {
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < set.size(); ++i) groups[set.label(i)].push_back(i);
    return groups;
}

double nearest(const EmbeddingSet& train, std::size_t i, const EmbeddingSet& test,
               const std::vector<std::size_t>& test_members, Metric metric) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j : test_members) {
        best = std::min(best, distance(train.vector(i), test.vector(j), metric));
    }
    return best;
}

}  // namespace

void EmbeddingSet::add(std::uint64_t id, std::size_t label, std::span<const double> vector) {
    if (ids_.empty() && dim_ == 0) dim_ = vector.size();
    if (vector.size() != dim_) {
        throw ShapeError("embedding " + std::to_string(id) + " has dimension " +
                         std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
    }
    values_.insert(values_.end(), vector.begin(), vector.end());
    labels_.push_back(label);
    ids_.push_back(id);
}

Metric parse_metric(std::string_view name) {
    if (name == "euclidean") return Metric::euclidean;
    if (name == "cosine_distance" || name == "cosine") return Metric::cosine_distance;
    throw ConfigError("unknown metric '" + std::string(name) + "'", "metric");
}

std::string_view to_string(Metric m) {
    return m == Metric::euclidean ? "euclidean" : "cosine_distance";
}

void DedupConfig::validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be >= 0", "eta");
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
    if (a.size() != b.size()) throw ShapeError("vectors differ in dimension");
    if (metric == Metric::euclidean) {
        double sq = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double diff = a[k] - b[k];
            sq += diff * diff;
        }
        return std::sqrt(sq);
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

double pairwise_min_distance(const EmbeddingSet& train, const EmbeddingSet& test, std::size_t label,
                             Metric metric) {
    if (train.size() > 0 && test.size() > 0 && train.dim() != test.dim()) {
        throw ShapeError("train and test embeddings differ in dimension");
    }
    std::vector<std::size_t> test_members;
    for (std::size_t j = 0; j < test.size(); ++j) {
        if (test.label(j) == label) test_members.push_back(j);
    }
    if (test_members.empty()) {
        throw MissingClassError("class " + std::to_string(label) + " has no test embeddings");
    }
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train.label(i) != label) continue;
        found = true;
        best = std::min(best, nearest(train, i, test, test_members, metric));
    }
    if (!found) {
        throw MissingClassError("class " + std::to_string(label) + " has no training embeddings");
    }
    return best;
}

DedupReport deduplicate(const EmbeddingSet& train, const EmbeddingSet& test, const DedupConfig& cfg) {
    cfg.validate();
    if (train.size() > 0 && test.size() > 0 && train.dim() != test.dim()) {
        throw ShapeError("train embeddings have dimension " + std::to_string(train.dim()) +
                         ", test embeddings " + std::to_string(test.dim()));
    }
    const auto train_groups = group_by_label(train);
    const auto test_groups = group_by_label(test);

    DedupReport report;
    for (const auto& [label, members] : train_groups) {
        const auto it = test_groups.find(label);
        if (it == test_groups.end()) {
            report.untested_classes.push_back(label);
            for (std::size_t i : members) report.kept_ids.push_back(train.id(i));
            continue;
        }
        std::vector<double> nearest_dist;
        nearest_dist.reserve(members.size());
        for (std::size_t i : members) {
            nearest_dist.push_back(nearest(train, i, test, it->second, cfg.metric));
        }
        const double theta = *std::min_element(nearest_dist.begin(), nearest_dist.end());
        report.per_class_theta[label] = theta;
        const double threshold = (1.0 + cfg.eta) * theta;
        for (std::size_t k = 0; k < members.size(); ++k) {
            auto& bucket = nearest_dist[k] < threshold ? report.removed_ids : report.kept_ids;
            bucket.push_back(train.id(members[k]));
        }
    }
    std::sort(report.removed_ids.begin(), report.removed_ids.end());
    std::sort(report.kept_ids.begin(), report.kept_ids.end());
    return report;
}

EmbeddingSet read_embeddings(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ParseError("missing header", line_no);
    const auto header = detail::split_fields(line);
    if (header.size() != 2) throw ParseError("header must be dim,count", line_no);
    const std::size_t dim = detail::parse_uint(header[0], line_no);
    const std::size_t count = detail::parse_uint(header[1], line_no);
    if (dim == 0) throw ParseError("dim must be >= 1", line_no);

    EmbeddingSet set(dim);
    std::vector<double> values(dim);
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != 2 + dim) {
            throw ParseError("expected " + std::to_string(2 + dim) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        const auto id = detail::parse_uint(fields[0], line_no);
        const auto label = detail::parse_uint(fields[1], line_no);
        for (std::size_t k = 0; k < dim; ++k) values[k] = detail::parse_double(fields[2 + k], line_no);
        set.add(id, label, values);
    }
    if (set.size() != count) {
        throw ParseError("header announces " + std::to_string(count) + " rows, found " +
                             std::to_string(set.size()),
                         line_no);
    }
    return set;
}

void write_embeddings(std::ostream& out, const EmbeddingSet& set) {
    out << set.dim() << ',' << set.size() << '\n';
    std::string line;
    for (std::size_t i = 0; i < set.size(); ++i) {
        line = std::to_string(set.id(i)) + ',' + std::to_string(set.label(i));
        for (double v : set.vector(i)) {
            line += ',';
            detail::append_double(line, v);
        }
        line += '\n';
        out << line;
    }
}

EmbeddingSet load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_embeddings(in);
}

std::string report_to_json(const DedupReport& report) {
    Json theta = Json::object();
    for (const auto& [label, value] : report.per_class_theta) theta[std::to_string(label)] = value;
    Json doc;
    doc["per_class_theta"] = theta;
    doc["removed_ids"] = report.removed_ids;
    doc["kept_ids"] = report.kept_ids;
    doc["untested_classes"] = report.untested_classes;
    return doc.dump(2) + "\n";
}

DedupReport report_from_json(std::string_view text) {
    DedupReport report;
    try {
        const Json doc = Json::parse(text);
        for (const auto& [key, value] : doc.at("per_class_theta").items()) {
            report.per_class_theta[std::stoul(key)] = value.get<double>();
        }
        report.removed_ids = doc.at("removed_ids").get<std::vector<std::uint64_t>>();
        report.kept_ids = doc.at("kept_ids").get<std::vector<std::uint64_t>>();
        if (doc.contains("untested_classes")) {
            report.untested_classes = doc.at("untested_classes").get<std::vector<std::size_t>>();
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("malformed dedup report: ") + e.what(), 1);
    }
    return report;
}

}  // namespace peerlearn::dedup
