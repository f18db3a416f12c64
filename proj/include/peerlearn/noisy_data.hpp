#pragma once

// Synthetic classification data plus the two label-noise types
// (cross-category flips and cross-domain outliers) and long-tail imbalance.
// Every generator is a pure function of its inputs and seed.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <span>
#include <string_view>
#include <vector>

namespace peerlearn::data {

struct Sample {
    std::vector<double> features;
    std::size_t observed_label = 0;
    // Hidden ground truth. Only metrics may read it.
    std::size_t clean_label = 0;
    // Drawn from the background distribution rather than any class. For such
    // samples clean_label mirrors observed_label.
    bool is_out_of_domain = false;
    std::uint64_t id = 0;

    bool is_clean() const { return !is_out_of_domain && observed_label == clean_label; }
    friend bool operator==(const Sample&, const Sample&) = default;
};

class Dataset {
public:
    Dataset() = default;
    // Validates labels and feature widths, then derives class_counts.
    Dataset(std::size_t num_classes, std::size_t dim, std::vector<Sample> samples);

    std::size_t num_classes() const { return num_classes_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    std::span<const Sample> samples() const { return samples_; }
    const Sample& operator[](std::size_t i) const { return samples_[i]; }
    // Counts by observed label.
    std::span<const std::size_t> class_counts() const { return class_counts_; }
    std::size_t in_domain_count() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::size_t num_classes_ = 0;
    std::size_t dim_ = 0;
    std::vector<Sample> samples_;
    std::vector<std::size_t> class_counts_;
};

enum class FlipModel { symmetric, pairwise };

FlipModel parse_flip_model(std::string_view name);
std::string_view to_string(FlipModel f);

struct NoiseSpec {
    double cross_category_rate = 0.0;
    FlipModel flip_model = FlipModel::symmetric;
    double cross_domain_rate = 0.0;
    double imbalance_factor = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

// Class c is N(center_c, I). Centers sit on signed coordinate axes at
// distance `separation` from the origin when 2*dim >= num_classes, otherwise
// on random directions of norm `separation`. Samples are grouped by class.
Dataset generate_gaussian_dataset(std::size_t num_classes, std::size_t per_class, std::size_t dim,
                                  double separation, std::uint64_t seed);

// Relabels exactly floor(rate * n_in_domain) in-domain samples chosen
// uniformly without replacement. Symmetric draws the new label uniformly from
// the other C-1 classes; pairwise maps c to (c+1) mod C.
Dataset inject_cross_category_noise(const Dataset& ds, double rate, FlipModel flip_model,
                                    std::uint64_t seed);

// Appends ceil(rate * n / (1 - rate)) background samples drawn uniformly from
// a box three times the per-coordinate extent of the data around its
// midpoint, each with a uniformly random label.
Dataset inject_cross_domain_noise(const Dataset& ds, double rate, std::uint64_t seed);

// Keeps ceil(n_max * factor^(-c/(C-1))) samples of class c, chosen uniformly.
// Requires every class to hold the same count.
Dataset apply_imbalance(const Dataset& ds, double factor, std::uint64_t seed);

double imbalance_ratio(std::span<const std::size_t> class_counts);
double imbalance_ratio(const Dataset& ds);

// Concatenation with ids renumbered 0..n-1.
Dataset merge_datasets(const Dataset& a, const Dataset& b);

// Imbalance, cross-category flips, then cross-domain outliers, each with a
// seed derived from spec.seed.
Dataset apply_noise(const Dataset& clean, const NoiseSpec& spec);

// CSV: header "num_classes,dim,count", then one row per sample
// "id,observed_label,clean_label,is_ood,f_0,...". Doubles are written with 17
// significant digits so reading back is bit-exact.
void write_dataset(std::ostream& out, const Dataset& ds);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

}  // namespace peerlearn::data
