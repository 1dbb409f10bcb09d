#include "lte/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

#include "lte/error.hpp"
#include "lte/parallel.hpp"
#include "lte/rng.hpp"
#include "serde_util.hpp"

namespace lte {

namespace {

// Grows one CART tree. Node sample sets are contiguous spans of idx_;
// splitting partitions the span in place, so growth needs no per-node
// copies of the data.
class TreeBuilder {
public:
    TreeBuilder(const std::vector<double>& x, const std::vector<int>& y,
                std::size_t dim, int num_classes, const ForestConfig& cfg,
                std::uint64_t seed)
        : x_(x), y_(y), dim_(dim), k_(num_classes), cfg_(cfg), rng_(seed) {}

    DecisionTree build() {
        const std::size_t n = y_.size();
        idx_.resize(n);
        if (cfg_.bootstrap) {
            for (std::size_t i = 0; i < n; ++i)
                idx_[i] = static_cast<int>(rng_.next_below(n));
        } else {
            for (std::size_t i = 0; i < n; ++i) idx_[i] = static_cast<int>(i);
        }
        feat_.resize(dim_);
        node_counts_.resize(k_);
        left_counts_.resize(k_);
        right_counts_.resize(k_);
        tree_ = DecisionTree();
        grow(0, n, 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
    };

    double value(int sample, int feature) const {
        return x_[static_cast<std::size_t>(sample) * dim_ + feature];
    }

    int grow(std::size_t lo, std::size_t hi, int depth) {
        const std::size_t n = hi - lo;
        std::fill(node_counts_.begin(), node_counts_.end(), 0);
        for (std::size_t i = lo; i < hi; ++i) ++node_counts_[y_[idx_[i]]];

        bool pure = false;
        for (int c = 0; c < k_; ++c)
            if (node_counts_[c] == static_cast<long>(n)) pure = true;
        const bool depth_capped = cfg_.max_depth > 0 && depth >= cfg_.max_depth;
        const std::size_t min_leaf = static_cast<std::size_t>(cfg_.min_leaf);

        Split best;
        if (!pure && !depth_capped && n >= 2 * min_leaf && n >= 2)
            best = find_best_split(lo, hi);
        if (best.feature < 0) return make_leaf(n);

        const int node = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.nodes[node].feature = best.feature;
        tree_.nodes[node].threshold = best.threshold;

        auto mid_it = std::partition(
            idx_.begin() + lo, idx_.begin() + hi,
            [&](int s) { return value(s, best.feature) <= best.threshold; });
        const std::size_t mid = static_cast<std::size_t>(mid_it - idx_.begin());
        require(mid > lo && mid < hi, "tree split produced an empty child");

        const int left = grow(lo, mid, depth + 1);
        tree_.nodes[node].left = left;
        const int right = grow(mid, hi, depth + 1);
        tree_.nodes[node].right = right;
        return node;
    }

    int make_leaf(std::size_t n) {
        const int node = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.nodes[node].hist = static_cast<int>(tree_.leaf_probs.size());
        for (int c = 0; c < k_; ++c)
            tree_.leaf_probs.push_back(static_cast<double>(node_counts_[c]) /
                                       static_cast<double>(n));
        return node;
    }

    // Scans the sampled features and returns the threshold with the lowest
    // weighted child Gini impurity. Minimizing sum_s n_s*(1 - sum_c p_sc^2)
    // is the same as maximizing sum_s (sum_c count_sc^2)/n_s, which updates
    // in O(1) per sample along the sorted sweep. Ties keep the first
    // candidate in scan order.
    Split find_best_split(std::size_t lo, std::size_t hi) {
        const std::size_t n = hi - lo;
        const std::size_t min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
        for (std::size_t f = 0; f < dim_; ++f) feat_[f] = static_cast<int>(f);
        const int mtry = cfg_.features_per_split;
        for (int j = 0; j < mtry; ++j) {
            const std::size_t other = j + rng_.next_below(dim_ - j);
            std::swap(feat_[j], feat_[other]);
        }

        Split best;
        double best_score = 0.0;
        sorted_.resize(n);
        for (int j = 0; j < mtry; ++j) {
            const int f = feat_[j];
            for (std::size_t i = 0; i < n; ++i) {
                const int s = idx_[lo + i];
                sorted_[i] = {value(s, f), y_[s]};
            }
            std::sort(sorted_.begin(), sorted_.end());
            if (sorted_.front().first == sorted_.back().first) continue;

            std::fill(left_counts_.begin(), left_counts_.end(), 0);
            std::fill(right_counts_.begin(), right_counts_.end(), 0);
            double sum_right = 0.0;
            for (std::size_t i = 0; i < n; ++i) ++right_counts_[sorted_[i].second];
            for (int c = 0; c < k_; ++c)
                sum_right += static_cast<double>(right_counts_[c]) * right_counts_[c];
            double sum_left = 0.0;

            for (std::size_t i = 0; i + 1 < n; ++i) {
                const int c = sorted_[i].second;
                sum_left += 2.0 * left_counts_[c] + 1.0;
                ++left_counts_[c];
                sum_right -= 2.0 * right_counts_[c] - 1.0;
                --right_counts_[c];
                const double lo_val = sorted_[i].first;
                const double hi_val = sorted_[i + 1].first;
                if (lo_val == hi_val) continue;
                const std::size_t n_left = i + 1;
                if (n_left < min_leaf || n - n_left < min_leaf) continue;
                const double score = sum_left / static_cast<double>(n_left) +
                                     sum_right / static_cast<double>(n - n_left);
                if (best.feature < 0 || score > best_score) {
                    // Midpoint can round up to hi_val; the predicate is
                    // x <= threshold, so fall back to lo_val to keep the
                    // boundary sample on the left.
                    double thr = lo_val + 0.5 * (hi_val - lo_val);
                    if (!(thr < hi_val)) thr = lo_val;
                    best.feature = f;
                    best.threshold = thr;
                    best_score = score;
                }
            }
        }
        return best;
    }

    const std::vector<double>& x_;
    const std::vector<int>& y_;
    const std::size_t dim_;
    const int k_;
    const ForestConfig& cfg_;
    Rng rng_;
    std::vector<int> idx_;
    std::vector<int> feat_;
    std::vector<long> node_counts_;
    std::vector<long> left_counts_;
    std::vector<long> right_counts_;
    std::vector<std::pair<double, int>> sorted_;
    DecisionTree tree_;
};

} // namespace

const double* DecisionTree::leaf_histogram(const FeatureVector& x) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        const Node& nd = nodes[node];
        node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return leaf_probs.data() + nodes[node].hist;
}

std::vector<double> RandomForest::predict_proba(const FeatureVector& x) const {
    require(!trees.empty(), "forest has no trees");
    require(static_cast<int>(x.size()) == feature_dim,
            "feature dimension mismatch in forest prediction");
    std::vector<double> probs(class_ids.size(), 0.0);
    for (const DecisionTree& tree : trees) {
        const double* hist = tree.leaf_histogram(x);
        for (std::size_t c = 0; c < probs.size(); ++c) probs[c] += hist[c];
    }
    const double scale = 1.0 / static_cast<double>(trees.size());
    for (double& p : probs) p *= scale;
    return probs;
}

int RandomForest::predict_class(const FeatureVector& x) const {
    const std::vector<double> probs = predict_proba(x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c)
        if (probs[c] > probs[best]) best = c;
    return class_ids[best];
}

RandomForest train_forest(const SampleSet& samples, const ForestConfig& config) {
    samples.validate();
    require(samples.size() > 0, "train_forest: empty sample set");
    require(config.num_trees >= 1, "train_forest: num_trees must be >= 1");
    require(config.max_depth >= 0, "train_forest: max_depth must be >= 0");
    require(config.min_leaf >= 1, "train_forest: min_leaf must be >= 1");
    require(config.features_per_split >= 0,
            "train_forest: features_per_split must be >= 0");

    const std::size_t n = samples.size();
    const std::size_t dim = samples.features.front().size();
    require(dim > 0, "train_forest: samples have no features");

    RandomForest forest;
    forest.config = config;
    if (forest.config.features_per_split == 0)
        forest.config.features_per_split =
            static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dim))));
    forest.config.features_per_split =
        std::min(forest.config.features_per_split, static_cast<int>(dim));
    forest.class_ids = samples.restricted_labels;
    forest.feature_dim = static_cast<int>(dim);

    std::vector<int> local(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = std::lower_bound(forest.class_ids.begin(), forest.class_ids.end(),
                                   samples.labels[i]);
        local[i] = static_cast<int>(it - forest.class_ids.begin());
    }
    std::vector<double> flat(n * dim);
    for (std::size_t i = 0; i < n; ++i)
        std::copy(samples.features[i].begin(), samples.features[i].end(),
                  flat.begin() + i * dim);

    forest.trees.resize(config.num_trees);
    parallel_for(static_cast<std::size_t>(config.num_trees), [&](std::size_t t) {
        TreeBuilder builder(flat, local, dim, forest.num_classes(), forest.config,
                            config.seed + t);
        forest.trees[t] = builder.build();
    });
    return forest;
}

namespace serde {

nlohmann::json forest_to_json(const RandomForest& forest) {
    nlohmann::json cfg;
    cfg["num_trees"] = forest.config.num_trees;
    cfg["max_depth"] = forest.config.max_depth;
    cfg["min_leaf"] = forest.config.min_leaf;
    cfg["features_per_split"] = forest.config.features_per_split;
    cfg["bootstrap"] = forest.config.bootstrap;
    cfg["seed"] = forest.config.seed;

    nlohmann::json trees = nlohmann::json::array();
    for (const DecisionTree& tree : forest.trees) {
        nlohmann::json t;
        auto& feature = t["feature"] = nlohmann::json::array();
        auto& threshold = t["threshold"] = nlohmann::json::array();
        auto& left = t["left"] = nlohmann::json::array();
        auto& right = t["right"] = nlohmann::json::array();
        auto& hist = t["hist"] = nlohmann::json::array();
        for (const DecisionTree::Node& nd : tree.nodes) {
            feature.push_back(nd.feature);
            threshold.push_back(nd.threshold);
            left.push_back(nd.left);
            right.push_back(nd.right);
            hist.push_back(nd.hist);
        }
        t["leaf_probs"] = tree.leaf_probs;
        trees.push_back(std::move(t));
    }

    nlohmann::json doc;
    doc["config"] = std::move(cfg);
    doc["class_ids"] = forest.class_ids;
    doc["feature_dim"] = forest.feature_dim;
    doc["trees"] = std::move(trees);
    return doc;
}

RandomForest forest_from_json(const nlohmann::json& doc) {
    RandomForest forest;
    const nlohmann::json& cfg = field(doc, "config");
    forest.config.num_trees = get_as<int>(cfg, "num_trees");
    forest.config.max_depth = get_as<int>(cfg, "max_depth");
    forest.config.min_leaf = get_as<int>(cfg, "min_leaf");
    forest.config.features_per_split = get_as<int>(cfg, "features_per_split");
    forest.config.bootstrap = get_as<bool>(cfg, "bootstrap");
    forest.config.seed = get_as<std::uint64_t>(cfg, "seed");
    forest.class_ids = get_as<std::vector<int>>(doc, "class_ids");
    forest.feature_dim = get_as<int>(doc, "feature_dim");

    const nlohmann::json& trees = field(doc, "trees");
    require(trees.is_array(), "forest trees field is not an array");
    const int k = forest.num_classes();
    for (const nlohmann::json& t : trees) {
        DecisionTree tree;
        auto feature = get_as<std::vector<int>>(t, "feature");
        auto threshold = get_as<std::vector<double>>(t, "threshold");
        auto left = get_as<std::vector<int>>(t, "left");
        auto right = get_as<std::vector<int>>(t, "right");
        auto hist = get_as<std::vector<int>>(t, "hist");
        tree.leaf_probs = get_as<std::vector<double>>(t, "leaf_probs");
        const std::size_t count = feature.size();
        require(threshold.size() == count && left.size() == count &&
                    right.size() == count && hist.size() == count,
                "forest tree arrays have mismatched lengths");
        require(count > 0, "forest tree has no nodes");
        const int node_count = static_cast<int>(count);
        const int probs_size = static_cast<int>(tree.leaf_probs.size());
        tree.nodes.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            DecisionTree::Node& nd = tree.nodes[i];
            nd.feature = feature[i];
            nd.threshold = threshold[i];
            nd.left = left[i];
            nd.right = right[i];
            nd.hist = hist[i];
            if (nd.feature >= 0) {
                require(nd.feature < forest.feature_dim,
                        "forest node feature out of range");
                require(nd.left >= 0 && nd.left < node_count && nd.right >= 0 &&
                            nd.right < node_count,
                        "forest node child out of range");
            } else {
                require(nd.hist >= 0 && nd.hist + k <= probs_size,
                        "forest leaf histogram out of range");
            }
        }
        forest.trees.push_back(std::move(tree));
    }
    require(!forest.trees.empty(), "forest has no trees");
    return forest;
}

} // namespace serde

void save_forest(const RandomForest& forest, const std::string& path) {
    nlohmann::json doc = serde::forest_to_json(forest);
    doc["schema_version"] = serde::kSchemaVersion;
    doc["kind"] = "random_forest";
    serde::write_json_file(path, doc);
}

RandomForest load_forest(const std::string& path) {
    nlohmann::json doc = serde::read_json_file(path);
    serde::check_envelope(doc, "random_forest");
    return serde::forest_from_json(doc);
}

} // namespace lte
