#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lte/dataset.hpp"
#include "lte/forest.hpp"
#include "lte/label_tree.hpp"
#include "lte/linalg.hpp"

namespace lte {

/// Meta-class likelihood vector of length 2(C-1), laid out as
/// (psi_1^L, psi_1^R, ..., psi_{C-1}^L, psi_{C-1}^R); adjacent pairs are
/// binary class posteriors and sum to 1.
using LTEVector = std::vector<double>;

/// Binary forest for one split node. Local class 1 is the negative side
/// (the node's left meta-class), class 2 the positive side (right).
struct SplitClassifier {
    int split_index = 0;
    RandomForest forest;
};

/// The embedding map: a label tree plus one binary classifier per split
/// node, applied to feature vectors of dimension feature_dim.
struct LTEModel {
    LabelTree tree;
    std::vector<SplitClassifier> classifiers; // ordered by split_index
    int feature_dim = 0;

    int embedding_dim() const { return 2 * (tree.num_classes() - 1); }
};

/// Trains one binary forest per split node on all samples of that node's
/// label set, negative/positive per the node's partition. Classifier i
/// uses the seed derived from (seed, "split", i).
LTEModel train_lte(const LabelTree& tree, const SampleSet& samples,
                   const ForestConfig& forest_config, std::uint64_t seed);

/// Likelihood pairs for one segment, in split-index order.
LTEVector embed_segment(const LTEModel& model, const FeatureVector& x);

/// Average pooling of the snippet's segment embeddings.
LTEVector embed_snippet(const LTEModel& model, const Snippet& snippet);

struct SnippetEmbedding {
    std::string snippet_id;
    int label = 0;
    LTEVector values;
};

/// embed_snippet over the whole dataset, in dataset order.
std::vector<SnippetEmbedding> embed_dataset(const LTEModel& model, const Dataset& dataset);

/// Out-of-fold embeddings for training data: snippets are stratified into
/// k folds; each fold's snippets are embedded by a model trained on the
/// other folds' segments only. Output follows dataset order.
std::vector<SnippetEmbedding> embed_dataset_out_of_fold(const Dataset& dataset,
                                                        const LabelTree& tree,
                                                        const ForestConfig& forest_config,
                                                        int k, std::uint64_t seed);

/// Scene-class-by-category closeness: kappa(c, y) is the mean probability
/// the scene forest assigns to class c over category y's samples, so each
/// column sums to 1.
struct ClosenessTable {
    Matrix kappa;
    std::vector<int> scene_classes;      // row order, the forest's classes
    std::vector<std::string> categories; // column order as given by the caller
};

ClosenessTable closeness(
    const RandomForest& scene_forest,
    const std::vector<std::pair<std::string, std::vector<FeatureVector>>>& aux_sets);

/// Per scene class (table row order): the column indices of the n largest
/// closeness values, descending, ties to the smaller column index.
std::vector<std::vector<int>> select_top_categories(const ClosenessTable& table, int n);

/// Embedding CSV exchange (header: snippet_id,label,e1..eD). label_names
/// turns stored label ids into the external names; loading remaps names
/// to 1..K in first-appearance order, like dataset CSVs.
void save_embeddings(const std::vector<SnippetEmbedding>& rows,
                     const std::vector<std::string>& label_names, const std::string& path);

struct EmbeddedDataset {
    std::vector<SnippetEmbedding> rows;
    std::vector<std::string> label_names;
};

EmbeddedDataset load_embeddings(const std::string& path);

void save_lte_model(const LTEModel& model, const std::string& path);
LTEModel load_lte_model(const std::string& path);

} // namespace lte
