#include "lte/label_tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lte/error.hpp"
#include "lte/rng.hpp"
#include "serde_util.hpp"

namespace lte {

namespace {

std::size_t index_of(const std::vector<int>& labels, int label, const char* what) {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    require(it != labels.end() && *it == label,
            std::string(what) + ": label " + std::to_string(label) +
                " is not in the label set");
    return static_cast<std::size_t>(it - labels.begin());
}

std::uint64_t label_set_hash(const std::vector<int>& labels) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int label : labels) {
        h ^= static_cast<std::uint32_t>(label);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

ConfusionMatrix confusion_matrix(const RandomForest& forest, const SampleSet& eval_set) {
    eval_set.validate();
    require(eval_set.size() > 0, "confusion_matrix: empty evaluation set");

    ConfusionMatrix out;
    out.labels = forest.class_ids;
    const std::size_t k = out.labels.size();
    out.matrix = Matrix(k, k);
    std::vector<std::size_t> counts(k, 0);

    for (std::size_t s = 0; s < eval_set.size(); ++s) {
        const std::size_t row =
            index_of(out.labels, eval_set.labels[s], "confusion_matrix");
        const std::vector<double> probs = forest.predict_proba(eval_set.features[s]);
        for (std::size_t j = 0; j < k; ++j) out.matrix(row, j) += probs[j];
        ++counts[row];
    }
    for (std::size_t i = 0; i < k; ++i) {
        require(counts[i] > 0, "confusion_matrix: class " + std::to_string(out.labels[i]) +
                                   " has no evaluation samples");
        for (std::size_t j = 0; j < k; ++j)
            out.matrix(i, j) /= static_cast<double>(counts[i]);
    }
    return out;
}

SymmetricAffinity symmetrize(const ConfusionMatrix& confusion) {
    const Matrix& a = confusion.matrix;
    require(a.rows() == a.cols(), "symmetrize: matrix must be square");
    SymmetricAffinity out;
    out.labels = confusion.labels;
    out.matrix = Matrix(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = (a(i, j) + a(j, i)) / 2.0;
            out.matrix(i, j) = v;
            out.matrix(j, i) = v;
        }
    }
    return out;
}

double partition_objective(const SymmetricAffinity& affinity, const Partition& partition) {
    const std::vector<int>& labels = affinity.labels;
    require(!partition.left.empty() && !partition.right.empty(),
            "partition_objective: both sides must be nonempty");
    require(partition.left.size() + partition.right.size() == labels.size(),
            "partition_objective: partition does not cover the label set");

    std::vector<std::size_t> left, right;
    for (int label : partition.left)
        left.push_back(index_of(labels, label, "partition_objective"));
    for (int label : partition.right)
        right.push_back(index_of(labels, label, "partition_objective"));
    std::vector<bool> seen(labels.size(), false);
    for (std::size_t i : left) seen[i] = true;
    for (std::size_t i : right) {
        require(!seen[i], "partition_objective: sides are not disjoint");
        seen[i] = true;
    }

    double total = 0.0;
    for (std::size_t i : left)
        for (std::size_t j : left) total += affinity.matrix(i, j);
    for (std::size_t m : right)
        for (std::size_t n : right) total += affinity.matrix(m, n);
    return total;
}

PartitionSearch brute_force_partition(const SymmetricAffinity& affinity) {
    const std::vector<int>& labels = affinity.labels;
    const std::size_t n = labels.size();
    require(n >= 2 && n <= 20, "brute_force_partition: label count must be in [2, 20]");
    require(affinity.matrix.rows() == n && affinity.matrix.cols() == n,
            "brute_force_partition: matrix size does not match labels");

    // labels[0] stays on the left, so each unordered partition is
    // enumerated exactly once; masks index the remaining n-1 labels.
    PartitionSearch best;
    const std::uint64_t mask_end = std::uint64_t{1} << (n - 1);
    for (std::uint64_t mask = 1; mask < mask_end; ++mask) {
        Partition candidate;
        candidate.left.push_back(labels[0]);
        for (std::size_t b = 0; b + 1 < n; ++b) {
            if (mask & (std::uint64_t{1} << b))
                candidate.right.push_back(labels[b + 1]);
            else
                candidate.left.push_back(labels[b + 1]);
        }
        const double objective = partition_objective(affinity, candidate);
        ++best.num_candidates;
        const bool better =
            best.partition.left.empty() || objective > best.objective ||
            (objective == best.objective &&
             std::lexicographical_compare(candidate.left.begin(), candidate.left.end(),
                                          best.partition.left.begin(),
                                          best.partition.left.end()));
        if (better) {
            best.partition = std::move(candidate);
            best.objective = objective;
        }
    }
    return best;
}

Partition spectral_partition(const SymmetricAffinity& affinity, std::uint64_t seed) {
    (void)seed; // every step below is deterministic
    const std::vector<int>& labels = affinity.labels;
    const std::size_t n = labels.size();
    require(n >= 2, "spectral_partition: need at least 2 labels");
    require(affinity.matrix.rows() == n && affinity.matrix.cols() == n,
            "spectral_partition: matrix size does not match labels");
    require(affinity.matrix.is_symmetric(1e-12),
            "spectral_partition: affinity must be symmetric");
    if (n == 2) return Partition{{labels[0]}, {labels[1]}};

    // Normalized affinity D^(-1/2) A D^(-1/2); zero-degree rows get a tiny
    // positive degree so the scaling stays finite.
    std::vector<double> inv_sqrt_degree(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = affinity.matrix.row_sum(i);
        if (d <= 0.0) d = 1e-12;
        inv_sqrt_degree[i] = 1.0 / std::sqrt(d);
    }
    Matrix normalized(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            normalized(i, j) =
                affinity.matrix(i, j) * inv_sqrt_degree[i] * inv_sqrt_degree[j];

    const EigenDecomposition eig = jacobi_eigen(normalized);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = eig.vectors(i, 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (v[i] != 0.0) {
            if (v[i] < 0.0)
                for (double& x : v) x = -x;
            break;
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    // The relaxation only orders the labels; the actual cut is chosen by
    // the objective over all n-1 contiguous cuts of that ordering.
    Partition best;
    double best_objective = 0.0;
    for (std::size_t cut = 1; cut < n; ++cut) {
        Partition candidate;
        for (std::size_t i = 0; i < n; ++i)
            (i < cut ? candidate.left : candidate.right).push_back(labels[order[i]]);
        std::sort(candidate.left.begin(), candidate.left.end());
        std::sort(candidate.right.begin(), candidate.right.end());
        const double objective = partition_objective(affinity, candidate);
        if (best.left.empty() || objective > best_objective) {
            best = std::move(candidate);
            best_objective = objective;
        }
    }
    if (best.left.front() != labels.front()) std::swap(best.left, best.right);
    return best;
}

std::vector<int> LabelTree::split_order() const {
    std::vector<int> order(static_cast<std::size_t>(num_splits()), -1);
    for (std::size_t id = 0; id < nodes.size(); ++id) {
        const int s = nodes[id].split_index;
        if (s > 0) {
            require(s <= num_splits() && order[s - 1] < 0,
                    "label tree split indices are not a bijection");
            order[s - 1] = static_cast<int>(id);
        }
    }
    for (int id : order)
        require(id >= 0, "label tree split indices are not a bijection");
    return order;
}

namespace {

void render_node(const LabelTree& tree, int id, int depth, std::ostringstream& out) {
    const LabelTree::Node& node = tree.nodes[id];
    for (int i = 0; i < depth; ++i) out << "  ";
    if (node.split_index == 0) {
        out << "- " << tree.label_names[node.labels[0] - 1] << "\n";
        return;
    }
    out << "+ split " << node.split_index << " [";
    for (std::size_t i = 0; i < node.labels.size(); ++i) {
        if (i > 0) out << " ";
        out << tree.label_names[node.labels[i] - 1];
    }
    out << "]\n";
    render_node(tree, node.left, depth + 1, out);
    render_node(tree, node.right, depth + 1, out);
}

} // namespace

std::string LabelTree::to_text() const {
    validate();
    std::ostringstream out;
    render_node(*this, 0, 0, out);
    return out.str();
}

void LabelTree::validate() const {
    require(!nodes.empty(), "label tree has no nodes");
    const int c = num_classes();
    require(c >= 1, "label tree root has no labels");
    int leaves = 0, splits = 0;
    for (std::size_t id = 0; id < nodes.size(); ++id) {
        const Node& node = nodes[id];
        require(!node.labels.empty(), "label tree node has an empty label set");
        require(std::is_sorted(node.labels.begin(), node.labels.end()) &&
                    std::adjacent_find(node.labels.begin(), node.labels.end()) ==
                        node.labels.end(),
                "label tree node labels must be sorted and unique");
        for (int label : node.labels)
            require(label >= 1 && label <= static_cast<int>(label_names.size()),
                    "label tree node label out of range");
        const bool leaf = node.left < 0 && node.right < 0;
        if (leaf) {
            require(node.labels.size() == 1, "label tree leaf must hold a single label");
            require(node.split_index == 0, "label tree leaf must not carry a split index");
            ++leaves;
            continue;
        }
        require(node.left >= 0 && node.right >= 0 &&
                    node.left < static_cast<int>(nodes.size()) &&
                    node.right < static_cast<int>(nodes.size()),
                "label tree split node children out of range");
        require(node.split_index >= 1, "label tree split node missing its split index");
        ++splits;
        // Children must partition the parent's label set.
        std::vector<int> merged = nodes[node.left].labels;
        merged.insert(merged.end(), nodes[node.right].labels.begin(),
                      nodes[node.right].labels.end());
        std::sort(merged.begin(), merged.end());
        require(merged == node.labels,
                "label tree split node children do not partition its label set");
    }
    require(leaves == c && splits == c - 1,
            "label tree must have C leaves and C-1 split nodes");
    split_order(); // checks the bijection onto 1..C-1
}

namespace {

struct TreeBuildContext {
    const Dataset& data;
    const ForestConfig& forest_config;
    std::uint64_t seed;
    LabelTree tree;
    int next_split = 1;

    Partition split_node(const std::vector<int>& labels) {
        if (labels.size() == 2) return Partition{{labels[0]}, {labels[1]}};
        const std::uint64_t node_seed = mix_seed(seed, label_set_hash(labels));
        const SampleSet node_samples = segments_of(data, labels);
        const auto halves =
            stratified_split(node_samples, 0.5, derive_seed(node_seed, "halve"));
        ForestConfig cfg = forest_config;
        cfg.seed = derive_seed(node_seed, "forest");
        const RandomForest forest = train_forest(halves.first, cfg);
        const ConfusionMatrix confusion = confusion_matrix(forest, halves.second);
        return spectral_partition(symmetrize(confusion),
                                  derive_seed(node_seed, "spectral"));
    }

    int build(std::vector<int> labels) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[id].labels = std::move(labels);
        if (tree.nodes[id].labels.size() == 1) return id;
        tree.nodes[id].split_index = next_split++;
        Partition partition = split_node(tree.nodes[id].labels);
        const int left = build(std::move(partition.left));
        tree.nodes[id].left = left;
        const int right = build(std::move(partition.right));
        tree.nodes[id].right = right;
        return id;
    }
};

} // namespace

LabelTree build_label_tree(const Dataset& data, const ForestConfig& forest_config,
                           std::uint64_t seed) {
    data.validate();
    require(data.num_classes >= 2, "build_label_tree: need at least 2 classes");
    std::vector<int> counts(static_cast<std::size_t>(data.num_classes), 0);
    for (const Snippet& snippet : data.snippets)
        counts[snippet.label - 1] += static_cast<int>(snippet.segments.size());
    std::vector<int> root_labels;
    for (int c = 1; c <= data.num_classes; ++c) {
        require(counts[c - 1] >= 2, "build_label_tree: class " + data.name_of(c) +
                                        " has fewer than 2 segments");
        root_labels.push_back(c);
    }

    TreeBuildContext ctx{data, forest_config, seed, LabelTree{}, 1};
    ctx.tree.label_names = data.label_names;
    ctx.build(std::move(root_labels));
    ctx.tree.validate();
    return ctx.tree;
}

namespace serde {

nlohmann::json label_tree_to_json(const LabelTree& tree) {
    tree.validate();
    nlohmann::json nodes = nlohmann::json::array();
    for (const LabelTree::Node& node : tree.nodes) {
        nlohmann::json n;
        n["labels"] = node.labels;
        n["left"] = node.left;
        n["right"] = node.right;
        n["split_index"] = node.split_index;
        nodes.push_back(std::move(n));
    }
    nlohmann::json doc;
    doc["label_names"] = tree.label_names;
    doc["nodes"] = std::move(nodes);
    return doc;
}

LabelTree label_tree_from_json(const nlohmann::json& doc) {
    LabelTree tree;
    tree.label_names = get_as<std::vector<std::string>>(doc, "label_names");
    const nlohmann::json& nodes = field(doc, "nodes");
    require(nodes.is_array(), "label tree nodes field is not an array");
    for (const nlohmann::json& n : nodes) {
        LabelTree::Node node;
        node.labels = get_as<std::vector<int>>(n, "labels");
        node.left = get_as<int>(n, "left");
        node.right = get_as<int>(n, "right");
        node.split_index = get_as<int>(n, "split_index");
        tree.nodes.push_back(std::move(node));
    }
    tree.validate();
    return tree;
}

} // namespace serde

void save_label_tree(const LabelTree& tree, const std::string& path) {
    nlohmann::json doc = serde::label_tree_to_json(tree);
    doc["schema_version"] = serde::kSchemaVersion;
    doc["kind"] = "label_tree";
    serde::write_json_file(path, doc);
}

LabelTree load_label_tree(const std::string& path) {
    const nlohmann::json doc = serde::read_json_file(path);
    serde::check_envelope(doc, "label_tree");
    return serde::label_tree_from_json(doc);
}

} // namespace lte
