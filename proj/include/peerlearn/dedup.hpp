#pragma once

// Train/test near-duplicate removal on precomputed embeddings. For each class
// c, theta_c is the smallest distance between any class-c training vector and
// any class-c test vector; a training vector is dropped when its distance to
// the nearest class-c test vector is strictly below (1 + eta) * theta_c.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace peerlearn::dedup {

class EmbeddingSet {
public:
    EmbeddingSet() = default;
    explicit EmbeddingSet(std::size_t dim) : dim_(dim) {}

    void add(std::uint64_t id, std::size_t label, std::span<const double> vector);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    std::span<const double> vector(std::size_t i) const {
        return {values_.data() + i * dim_, dim_};
    }
    std::size_t label(std::size_t i) const { return labels_[i]; }
    std::uint64_t id(std::size_t i) const { return ids_[i]; }
    std::span<const std::size_t> labels() const { return labels_; }
    std::span<const std::uint64_t> ids() const { return ids_; }

private:
    std::size_t dim_ = 0;
    std::vector<double> values_;
    std::vector<std::size_t> labels_;
    std::vector<std::uint64_t> ids_;
};

enum class Metric { euclidean, cosine_distance };

Metric parse_metric(std::string_view name);
std::string_view to_string(Metric m);

struct DedupConfig {
    double eta = 0.01;
    Metric metric = Metric::euclidean;

    void validate() const;
};

struct DedupReport {
    std::map<std::size_t, double> per_class_theta;
    // Both sorted ascending.
    std::vector<std::uint64_t> removed_ids;
    std::vector<std::uint64_t> kept_ids;
    // Training classes without test vectors; all their items are kept.
    std::vector<std::size_t> untested_classes;

    friend bool operator==(const DedupReport&, const DedupReport&) = default;
};

// Cosine distance is 1 - cos; a zero vector is treated as orthogonal to
// everything (distance 1).
double distance(std::span<const double> a, std::span<const double> b, Metric metric);

double pairwise_min_distance(const EmbeddingSet& train, const EmbeddingSet& test, std::size_t label,
                             Metric metric);

DedupReport deduplicate(const EmbeddingSet& train, const EmbeddingSet& test, const DedupConfig& cfg);

// Header "dim,count", then rows "id,label,v_0,...,v_{dim-1}".
EmbeddingSet read_embeddings(std::istream& in);
void write_embeddings(std::ostream& out, const EmbeddingSet& set);
EmbeddingSet load_embeddings(const std::string& path);

std::string report_to_json(const DedupReport& report);
DedupReport report_from_json(std::string_view text);

}  // namespace peerlearn::dedup
