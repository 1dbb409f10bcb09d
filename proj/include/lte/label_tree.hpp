#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lte/dataset.hpp"
#include "lte/forest.hpp"
#include "lte/linalg.hpp"

namespace lte {

/// Row-stochastic class confusion estimated on held-out samples: entry
/// (i, j) is the mean predicted probability of class labels[j] over
/// evaluation samples whose true class is labels[i].
struct ConfusionMatrix {
    Matrix matrix;
    std::vector<int> labels; // sorted class ids indexing rows and columns
};

/// Every evaluation label must be one of the forest's classes, and every
/// forest class needs at least one evaluation sample.
ConfusionMatrix confusion_matrix(const RandomForest& forest, const SampleSet& eval_set);

struct SymmetricAffinity {
    Matrix matrix;
    std::vector<int> labels;
};

/// (A + A^T) / 2. Both triangles are assigned from the same expression,
/// so the result is exactly symmetric in floating point.
SymmetricAffinity symmetrize(const ConfusionMatrix& confusion);

struct Partition {
    std::vector<int> left;  // sorted class ids, contains the smallest label
    std::vector<int> right; // sorted class ids
};

/// Total within-group affinity over ordered pairs, diagonal included:
/// sum over (i,j) in left^2 of a(i,j) plus the same over right^2.
double partition_objective(const SymmetricAffinity& affinity, const Partition& partition);

struct PartitionSearch {
    Partition partition;
    double objective = 0.0;
    std::uint64_t num_candidates = 0;
};

/// Exhaustive maximization over all 2^(n-1) - 1 unordered two-way
/// partitions; requires 2 <= n <= 20. Ties prefer the lexicographically
/// smallest left side.
PartitionSearch brute_force_partition(const SymmetricAffinity& affinity);

/// Two-way spectral split: orders labels by the second eigenvector of
/// D^(-1/2) A D^(-1/2) and returns the contiguous cut of that ordering
/// with the largest partition objective. Deterministic; the seed is
/// accepted for interface stability but no step needs randomness.
Partition spectral_partition(const SymmetricAffinity& affinity, std::uint64_t seed);

/// Binary tree over class ids stored as an arena. Leaves hold a single
/// label. Split nodes carry pre-order indices 1..C-1, the layout order
/// of the embedding.
class LabelTree {
public:
    struct Node {
        std::vector<int> labels; // sorted class ids covered by this node
        int left = -1;
        int right = -1;
        int split_index = 0; // 0 for leaves
    };

    std::vector<Node> nodes;               // nodes[0] is the root
    std::vector<std::string> label_names;  // indexed by class id

    int num_classes() const { return static_cast<int>(nodes[0].labels.size()); }
    int num_splits() const { return num_classes() - 1; }

    /// Node ids of the split nodes ordered by split_index (1..C-1).
    std::vector<int> split_order() const;

    /// Indented dump, one node per line, leaves marked.
    std::string to_text() const;

    /// Structural invariants: children partition their parent, leaves are
    /// singletons, split indices form a bijection onto 1..C-1.
    void validate() const;
};

/// Learns the hierarchy from classifier confusion. At each node the
/// samples of the node's labels are stratified-halved; one half trains a
/// forest, the other half estimates the confusion that drives the
/// spectral split. Randomness derives from (seed, node label set), so
/// results do not depend on traversal order. forest_config.seed is
/// ignored in favor of those derived seeds.
LabelTree build_label_tree(const Dataset& data, const ForestConfig& forest_config,
                           std::uint64_t seed);

void save_label_tree(const LabelTree& tree, const std::string& path);
LabelTree load_label_tree(const std::string& path);

} // namespace lte
