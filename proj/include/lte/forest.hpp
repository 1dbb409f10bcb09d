#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lte/dataset.hpp"

namespace lte {

struct ForestConfig {
    int num_trees = 200;
    int max_depth = 0;          // 0 = unlimited
    int min_leaf = 1;
    int features_per_split = 0; // 0 = ceil(sqrt(M)), resolved at training time
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

/// CART tree with numeric splits. Flattened node storage; leaf class
/// histograms live in one flat array indexed by hist offset.
struct DecisionTree {
    struct Node {
        int feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int hist = -1; // offset into leaf_probs for leaves
    };
    std::vector<Node> nodes; // nodes[0] is the root
    std::vector<double> leaf_probs;

    /// Pointer to the K-entry histogram of the leaf x falls into.
    const double* leaf_histogram(const FeatureVector& x) const;
};

/// Ensemble of CART trees with probability support: the predicted
/// distribution is the unweighted mean of the leaf histograms.
class RandomForest {
public:
    ForestConfig config;          // resolved values as used for training
    std::vector<int> class_ids;   // local index i maps to class_ids[i]
    int feature_dim = 0;
    std::vector<DecisionTree> trees;

    int num_classes() const { return static_cast<int>(class_ids.size()); }

    /// Mean leaf histogram across trees, aligned with class_ids.
    std::vector<double> predict_proba(const FeatureVector& x) const;

    /// argmax of predict_proba; ties go to the smallest class id.
    int predict_class(const FeatureVector& x) const;
};

/// Grows config.num_trees trees with Gini splits on bootstrap resamples,
/// examining features_per_split uniformly sampled features per node.
/// Tree t uses seed + t, so training parallelizes without changing results.
RandomForest train_forest(const SampleSet& samples, const ForestConfig& config);

void save_forest(const RandomForest& forest, const std::string& path);
RandomForest load_forest(const std::string& path);

} // namespace lte
