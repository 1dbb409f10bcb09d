#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lte {

using FeatureVector = std::vector<double>;

/// One scene instance: an ordered list of segment feature vectors sharing
/// a class label. Segment durations are upstream metadata; only the
/// vectors matter here.
struct Snippet {
    std::string id;
    int label = 0; // 1..C
    std::vector<FeatureVector> segments;
};

/// A labeled collection of snippets with a fixed feature dimension and a
/// bijection between external label names and internal indices 1..C.
struct Dataset {
    std::vector<Snippet> snippets;
    int num_classes = 0;
    int feature_dim = 0;
    std::vector<std::string> label_names; // label_names[c-1] names class c

    const std::string& name_of(int label) const { return label_names[label - 1]; }
    void validate() const;

    /// Structural equality: same shape and content with labels compared by
    /// external name, so the internal index assignment does not matter.
    bool same_structure(const Dataset& other) const;
};

/// Flat segment-level samples restricted to a label subset. This is the
/// unit the forest and tree-learning stages consume.
struct SampleSet {
    std::vector<FeatureVector> features;
    std::vector<int> labels;
    std::vector<int> restricted_labels; // sorted ascending, no duplicates

    std::size_t size() const { return features.size(); }
    void validate() const;
};

/// Reads the dataset CSV (header: snippet_id,label,segment_index,f1..fM).
/// External label names are remapped to 1..C in first-appearance order.
Dataset load_dataset(const std::string& path);

/// Writes the CSV schema read by load_dataset. Numbers are printed with
/// shortest round-trip precision.
void save_dataset(const Dataset& dataset, const std::string& path);

/// Elementwise arithmetic mean of a nonempty list of equal-length vectors.
FeatureVector pool_average(const std::vector<FeatureVector>& vectors);

/// All segments of the snippets whose labels fall in `labels`
/// (empty = all classes). restricted_labels is the sorted label set.
SampleSet segments_of(const Dataset& dataset, const std::vector<int>& labels = {});

/// Per class: ceil(fraction * n_c) members go to part_a (capped so part_b
/// keeps at least one), the rest to part_b, membership by seeded shuffle.
/// Returned masks state, per element, whether it landed in part_a.
std::vector<bool> stratified_split_mask(const std::vector<int>& labels, double fraction,
                                        std::uint64_t seed);

std::pair<SampleSet, SampleSet> stratified_split(const SampleSet& samples, double fraction,
                                                 std::uint64_t seed);
std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double fraction,
                                             std::uint64_t seed);

/// Fold id in 0..k-1 for every element; per class, fold sizes differ by
/// at most one. Deterministic given the seed.
std::vector<int> stratified_fold_assignments(const std::vector<int>& labels, int k,
                                             std::uint64_t seed);

struct FoldSplit {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> eval_indices;
};

/// k cross-validation splits over snippets; the eval parts partition the
/// dataset.
std::vector<FoldSplit> stratified_kfold(const Dataset& dataset, int k, std::uint64_t seed);

std::vector<int> snippet_labels(const Dataset& dataset);

} // namespace lte
