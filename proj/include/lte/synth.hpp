#pragma once

#include <cstdint>

#include "lte/dataset.hpp"
#include "lte/label_tree.hpp"

namespace lte {

struct SynthConfig {
    int num_classes = 8; // must equal 2^depth
    int feature_dim = 16;
    int depth = 3;
    double separation = 4.0;
    double sigma = 0.5;
    int snippets_per_class = 20;
    int segments_per_snippet = 10;
    std::uint64_t seed = 0;
};

struct SynthData {
    Dataset dataset;
    LabelTree planted; // the hierarchy the class means were placed on
};

/// Places class means at the leaves of a balanced binary tree: the bit at
/// level l of the class index (l = 0 at the bottom) sets coordinate l to
/// bit * separation * 2^(l - depth + 1), so the two subtrees under the
/// root sit `separation` apart and the sibling gap halves at each level
/// down, staying proportional to 2^l. Remaining coordinates are 0;
/// segments are N(mean, sigma^2 I). Classes are named c1..cC.
SynthData synth_hierarchy_dataset(const SynthConfig& config);

} // namespace lte
