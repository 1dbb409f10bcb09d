#include "lte/embedding.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "io_util.hpp"
#include "lte/error.hpp"
#include "lte/rng.hpp"
#include "serde_util.hpp"

namespace lte {

LTEModel train_lte(const LabelTree& tree, const SampleSet& samples,
                   const ForestConfig& forest_config, std::uint64_t seed) {
    tree.validate();
    samples.validate();
    require(samples.size() > 0, "train_lte: empty sample set");
    for (int label : tree.nodes[0].labels)
        require(std::binary_search(samples.restricted_labels.begin(),
                                   samples.restricted_labels.end(), label),
                "train_lte: no samples for class " + std::to_string(label));

    LTEModel model;
    model.tree = tree;
    model.feature_dim = static_cast<int>(samples.features.front().size());
    const std::vector<int> order = tree.split_order();
    model.classifiers.reserve(order.size());
    for (int node_id : order) {
        const LabelTree::Node& node = tree.nodes[node_id];
        const std::vector<int>& left = tree.nodes[node.left].labels;

        SampleSet split_samples;
        split_samples.restricted_labels = {1, 2};
        bool has_negative = false, has_positive = false;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!std::binary_search(node.labels.begin(), node.labels.end(),
                                    samples.labels[i]))
                continue;
            const bool negative =
                std::binary_search(left.begin(), left.end(), samples.labels[i]);
            split_samples.features.push_back(samples.features[i]);
            split_samples.labels.push_back(negative ? 1 : 2);
            (negative ? has_negative : has_positive) = true;
        }
        require(has_negative && has_positive,
                "train_lte: split node " + std::to_string(node.split_index) +
                    " has samples on only one side");

        ForestConfig cfg = forest_config;
        cfg.seed = derive_seed(seed, "split",
                               static_cast<std::uint64_t>(node.split_index));
        model.classifiers.push_back({node.split_index, train_forest(split_samples, cfg)});
    }
    return model;
}

LTEVector embed_segment(const LTEModel& model, const FeatureVector& x) {
    require(static_cast<int>(x.size()) == model.feature_dim,
            "embed_segment: feature dimension mismatch");
    require(static_cast<int>(model.classifiers.size()) == model.tree.num_splits(),
            "embed_segment: model classifier count does not match its tree");
    LTEVector out(2 * model.classifiers.size());
    for (const SplitClassifier& clf : model.classifiers) {
        require(clf.forest.num_classes() == 2,
                "embed_segment: split classifier is not binary");
        const std::vector<double> probs = clf.forest.predict_proba(x);
        out[2 * (clf.split_index - 1)] = probs[0];
        out[2 * (clf.split_index - 1) + 1] = probs[1];
    }
    return out;
}

LTEVector embed_snippet(const LTEModel& model, const Snippet& snippet) {
    require(!snippet.segments.empty(),
            "embed_snippet: snippet " + snippet.id + " has no segments");
    std::vector<LTEVector> parts;
    parts.reserve(snippet.segments.size());
    for (const FeatureVector& segment : snippet.segments)
        parts.push_back(embed_segment(model, segment));
    return pool_average(parts);
}

std::vector<SnippetEmbedding> embed_dataset(const LTEModel& model, const Dataset& dataset) {
    dataset.validate();
    std::vector<SnippetEmbedding> rows;
    rows.reserve(dataset.snippets.size());
    for (const Snippet& snippet : dataset.snippets)
        rows.push_back({snippet.id, snippet.label, embed_snippet(model, snippet)});
    return rows;
}

std::vector<SnippetEmbedding> embed_dataset_out_of_fold(const Dataset& dataset,
                                                        const LabelTree& tree,
                                                        const ForestConfig& forest_config,
                                                        int k, std::uint64_t seed) {
    dataset.validate();
    require(k >= 2, "out-of-fold embedding needs k >= 2");
    const std::vector<int> folds =
        stratified_fold_assignments(snippet_labels(dataset), k, derive_seed(seed, "folds"));

    std::vector<SnippetEmbedding> rows(dataset.snippets.size());
    for (int f = 0; f < k; ++f) {
        SampleSet train;
        std::set<int> present;
        for (std::size_t i = 0; i < dataset.snippets.size(); ++i) {
            if (folds[i] == f) continue;
            const Snippet& snippet = dataset.snippets[i];
            for (const FeatureVector& segment : snippet.segments) {
                train.features.push_back(segment);
                train.labels.push_back(snippet.label);
            }
            present.insert(snippet.label);
        }
        train.restricted_labels.assign(present.begin(), present.end());
        const LTEModel model = train_lte(tree, train, forest_config,
                                         derive_seed(seed, "fold_model",
                                                     static_cast<std::uint64_t>(f)));
        for (std::size_t i = 0; i < dataset.snippets.size(); ++i) {
            if (folds[i] != f) continue;
            rows[i] = {dataset.snippets[i].id, dataset.snippets[i].label,
                       embed_snippet(model, dataset.snippets[i])};
        }
    }
    return rows;
}

ClosenessTable closeness(
    const RandomForest& scene_forest,
    const std::vector<std::pair<std::string, std::vector<FeatureVector>>>& aux_sets) {
    require(!aux_sets.empty(), "closeness: no auxiliary categories");
    std::set<std::string> names;
    for (const auto& [name, vectors] : aux_sets) {
        require(names.insert(name).second,
                "closeness: duplicate auxiliary category '" + name + "'");
        require(!vectors.empty(),
                "closeness: auxiliary category '" + name + "' has no samples");
        for (const FeatureVector& x : vectors)
            require(static_cast<int>(x.size()) == scene_forest.feature_dim,
                    "closeness: feature dimension mismatch in category '" + name + "'");
    }

    ClosenessTable table;
    table.scene_classes = scene_forest.class_ids;
    const std::size_t c = table.scene_classes.size();
    table.kappa = Matrix(c, aux_sets.size());
    for (std::size_t y = 0; y < aux_sets.size(); ++y) {
        table.categories.push_back(aux_sets[y].first);
        const std::vector<FeatureVector>& vectors = aux_sets[y].second;
        for (const FeatureVector& x : vectors) {
            const std::vector<double> probs = scene_forest.predict_proba(x);
            for (std::size_t i = 0; i < c; ++i) table.kappa(i, y) += probs[i];
        }
        for (std::size_t i = 0; i < c; ++i)
            table.kappa(i, y) /= static_cast<double>(vectors.size());
    }
    return table;
}

std::vector<std::vector<int>> select_top_categories(const ClosenessTable& table, int n) {
    const int total = static_cast<int>(table.categories.size());
    require(n >= 1, "select_top_categories: N must be >= 1");
    require(n <= total, "select_top_categories: N exceeds category count");

    std::vector<std::vector<int>> selected;
    for (std::size_t row = 0; row < table.scene_classes.size(); ++row) {
        std::vector<int> cols(total);
        for (int y = 0; y < total; ++y) cols[y] = y;
        std::stable_sort(cols.begin(), cols.end(), [&](int a, int b) {
            return table.kappa(row, a) > table.kappa(row, b);
        });
        cols.resize(n);
        selected.push_back(std::move(cols));
    }
    return selected;
}

void save_embeddings(const std::vector<SnippetEmbedding>& rows,
                     const std::vector<std::string>& label_names, const std::string& path) {
    require(!rows.empty(), "cannot write an empty embedding set");
    const std::size_t dim = rows.front().values.size();
    require(dim > 0, "embedding rows have no values");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open file for writing: " + path);
    out << "snippet_id,label";
    for (std::size_t d = 1; d <= dim; ++d) out << ",e" << d;
    out << "\n";
    for (const SnippetEmbedding& row : rows) {
        require(row.values.size() == dim, "embedding rows have mixed dimensions");
        require(row.label >= 1 && row.label <= static_cast<int>(label_names.size()),
                "embedding row label out of range");
        require(!row.snippet_id.empty() &&
                    row.snippet_id.find_first_of(",\n\r") == std::string::npos,
                "snippet id unusable in CSV: '" + row.snippet_id + "'");
        out << row.snippet_id << ',' << label_names[row.label - 1];
        for (double v : row.values) out << ',' << io::format_double(v);
        out << "\n";
    }
    out.flush();
    require(out.good(), "failed to write file: " + path);
}

EmbeddedDataset load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open file: " + path);

    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "embedding file is empty: " + path);
    const std::vector<std::string> header = io::split_csv_line(line);
    require(header.size() >= 3, "embedding header needs snippet_id,label,e1,...");
    require(header[0] == "snippet_id" && header[1] == "label",
            "embedding header must start with snippet_id,label");
    const std::size_t dim = header.size() - 2;
    for (std::size_t d = 0; d < dim; ++d)
        require(header[d + 2] == "e" + std::to_string(d + 1),
                "embedding header column " + std::to_string(d + 3) + " must be e" +
                    std::to_string(d + 1));

    EmbeddedDataset data;
    std::set<std::string> seen_ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = io::split_csv_line(line);
        const std::string where = path + ":" + std::to_string(line_no);
        require(cells.size() == header.size(), "wrong column count at " + where);
        require(seen_ids.insert(cells[0]).second,
                "duplicate snippet id '" + cells[0] + "' at " + where);

        SnippetEmbedding row;
        row.snippet_id = cells[0];
        auto it = std::find(data.label_names.begin(), data.label_names.end(), cells[1]);
        if (it == data.label_names.end()) {
            data.label_names.push_back(cells[1]);
            row.label = static_cast<int>(data.label_names.size());
        } else {
            row.label = static_cast<int>(it - data.label_names.begin()) + 1;
        }
        for (std::size_t d = 0; d < dim; ++d)
            row.values.push_back(io::parse_double(cells[d + 2], where));
        data.rows.push_back(std::move(row));
    }
    require(!data.rows.empty(), "embedding file has no rows: " + path);
    return data;
}

void save_lte_model(const LTEModel& model, const std::string& path) {
    nlohmann::json classifiers = nlohmann::json::array();
    for (const SplitClassifier& clf : model.classifiers) {
        nlohmann::json c;
        c["split_index"] = clf.split_index;
        c["forest"] = serde::forest_to_json(clf.forest);
        classifiers.push_back(std::move(c));
    }
    nlohmann::json doc;
    doc["schema_version"] = serde::kSchemaVersion;
    doc["kind"] = "lte_model";
    doc["feature_dim"] = model.feature_dim;
    doc["tree"] = serde::label_tree_to_json(model.tree);
    doc["classifiers"] = std::move(classifiers);
    serde::write_json_file(path, doc);
}

LTEModel load_lte_model(const std::string& path) {
    const nlohmann::json doc = serde::read_json_file(path);
    serde::check_envelope(doc, "lte_model");

    LTEModel model;
    model.feature_dim = serde::get_as<int>(doc, "feature_dim");
    model.tree = serde::label_tree_from_json(serde::field(doc, "tree"));
    const nlohmann::json& classifiers = serde::field(doc, "classifiers");
    require(classifiers.is_array(), "lte model classifiers field is not an array");
    for (const nlohmann::json& c : classifiers) {
        SplitClassifier clf;
        clf.split_index = serde::get_as<int>(c, "split_index");
        clf.forest = serde::forest_from_json(serde::field(c, "forest"));
        require(clf.forest.num_classes() == 2 && clf.forest.class_ids[0] == 1 &&
                    clf.forest.class_ids[1] == 2,
                "lte model split classifier must be binary over classes {1, 2}");
        require(clf.forest.feature_dim == model.feature_dim,
                "lte model split classifier feature dimension mismatch");
        model.classifiers.push_back(std::move(clf));
    }
    require(static_cast<int>(model.classifiers.size()) == model.tree.num_splits(),
            "lte model classifier count does not match its tree");
    for (std::size_t i = 0; i < model.classifiers.size(); ++i)
        require(model.classifiers[i].split_index == static_cast<int>(i) + 1,
                "lte model classifiers must be ordered by split index");
    return model;
}

} // namespace lte
