#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "io_util.hpp"
#include "lte/dataset.hpp"
#include "lte/embedding.hpp"
#include "lte/error.hpp"
#include "lte/experiment.hpp"
#include "lte/forest.hpp"
#include "lte/kernels.hpp"
#include "lte/label_tree.hpp"
#include "lte/metrics.hpp"
#include "lte/svm.hpp"
#include "lte/synth.hpp"

namespace {

const std::vector<std::string> kKernelNames = {"linear", "chi2", "hist", "rbf", "fusion"};

std::vector<lte::FeatureVector> values_of(const lte::EmbeddedDataset& data) {
    std::vector<lte::FeatureVector> out;
    out.reserve(data.rows.size());
    for (const lte::SnippetEmbedding& row : data.rows) out.push_back(row.values);
    return out;
}

/// Channel files must describe the same snippets in the same order with
/// the same labels; only the embedding values may differ.
void check_channel_alignment(const std::vector<lte::EmbeddedDataset>& channels,
                             const std::vector<std::string>& paths) {
    for (std::size_t ch = 1; ch < channels.size(); ++ch) {
        lte::require(channels[ch].label_names == channels[0].label_names,
                     "'" + paths[ch] + "' disagrees with '" + paths[0] + "' on class names");
        lte::require(channels[ch].rows.size() == channels[0].rows.size(),
                     "'" + paths[ch] + "' has a different row count than '" + paths[0] + "'");
        for (std::size_t i = 0; i < channels[0].rows.size(); ++i) {
            lte::require(channels[ch].rows[i].snippet_id == channels[0].rows[i].snippet_id,
                         "'" + paths[ch] + "' disagrees on snippet order at '" +
                             channels[0].rows[i].snippet_id + "'");
            lte::require(channels[ch].rows[i].label == channels[0].rows[i].label,
                         "'" + paths[ch] + "' disagrees on the label of snippet '" +
                             channels[0].rows[i].snippet_id + "'");
        }
    }
}

std::vector<lte::EmbeddedDataset> load_channels(const std::vector<std::string>& paths) {
    std::vector<lte::EmbeddedDataset> channels;
    for (const std::string& path : paths) channels.push_back(lte::load_embeddings(path));
    check_channel_alignment(channels, paths);
    return channels;
}

/// snippet_id,label pairs from any CSV carrying those two columns
/// (dataset, embedding, or prediction files). Repeated ids must agree on
/// the label; first appearance fixes the order.
std::vector<std::pair<std::string, std::string>> read_labeled_ids(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw lte::ValidationError("cannot open file '" + path + "'");
    std::string line;
    lte::require(static_cast<bool>(std::getline(in, line)), "file '" + path + "' is empty");
    const std::vector<std::string> header = lte::io::split_csv_line(line);
    int id_col = -1, label_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == "snippet_id") id_col = static_cast<int>(j);
        if (header[j] == "label") label_col = static_cast<int>(j);
    }
    lte::require(id_col >= 0 && label_col >= 0,
                 "file '" + path + "' needs snippet_id and label columns");

    std::vector<std::pair<std::string, std::string>> out;
    std::map<std::string, std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = lte::io::split_csv_line(line);
        const std::string where = path + ":" + std::to_string(line_no);
        lte::require(fields.size() == header.size(), "wrong column count at " + where);
        const std::string& id = fields[id_col];
        const std::string& name = fields[label_col];
        lte::require(!id.empty() && !name.empty(), "empty snippet_id or label at " + where);
        const auto [it, fresh] = seen.emplace(id, name);
        if (fresh)
            out.emplace_back(id, name);
        else
            lte::require(it->second == name,
                         "conflicting labels for snippet '" + id + "' at " + where);
    }
    lte::require(!out.empty(), "file '" + path + "' has no data rows");
    return out;
}

nlohmann::json tune_to_json(const lte::TuneResult& result, lte::KernelKind kind, int folds,
                            double tol, const std::vector<double>& c_grid,
                            const std::vector<double>& gamma_grid) {
    nlohmann::json doc;
    doc["schema_version"] = "1.0";
    doc["kind"] = "tune";
    doc["kernel"] = lte::to_string(kind);
    doc["folds"] = folds;
    doc["tol"] = tol;
    doc["c_grid"] = c_grid;
    doc["gamma_grid"] = gamma_grid;
    doc["best"] = {{"c_reg", result.c_reg},
                   {"gamma", result.gamma},
                   {"accuracy", result.accuracy}};
    nlohmann::json table = nlohmann::json::array();
    for (const lte::TuneEntry& entry : result.table)
        table.push_back(
            {{"c_reg", entry.c_reg}, {"gamma", entry.gamma}, {"accuracy", entry.accuracy}});
    doc["table"] = std::move(table);
    return doc;
}

void write_json(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    lte::require(out.good(), "cannot open file for writing: " + path);
    out << doc.dump() << '\n';
    lte::require(out.good(), "failed writing file: " + path);
}

/// Kernel descriptor plus normalizers for a training set; shared by
/// `svm train` and the final stage of `gram`.
struct TrainKernel {
    lte::KernelDescriptor descriptor;
    std::vector<double> mean_distances;
};

TrainKernel resolve_train_kernel(lte::KernelKind kind,
                                 const std::vector<std::vector<lte::FeatureVector>>& channels,
                                 double gamma_flag) {
    if (kind != lte::KernelKind::fusion)
        lte::require(channels.size() == 1,
                     "the " + lte::to_string(kind) +
                         " kernel takes exactly one --data file; use fusion for channels");
    if (gamma_flag != 0.0)
        lte::require(kind == lte::KernelKind::rbf, "--gamma only applies to the rbf kernel");

    TrainKernel out;
    out.descriptor.kind = kind;
    out.mean_distances.assign(channels.size(), 0.0);
    if (kind == lte::KernelKind::fusion) {
        for (std::size_t ch = 0; ch < channels.size(); ++ch)
            out.mean_distances[ch] = lte::mean_chi2(channels[ch]);
    } else if (kind == lte::KernelKind::chi2) {
        out.mean_distances[0] = lte::mean_chi2(channels[0]);
        out.descriptor.mean_distance = out.mean_distances[0];
    } else if (kind == lte::KernelKind::rbf) {
        out.descriptor.gamma =
            gamma_flag > 0.0 ? gamma_flag : lte::default_rbf_gamma(channels[0]);
    }
    return out;
}

lte::GramMatrix train_gram_for(const TrainKernel& kernel,
                               const std::vector<std::vector<lte::FeatureVector>>& channels) {
    if (kernel.descriptor.kind == lte::KernelKind::fusion) {
        std::vector<lte::Channel> parts;
        for (std::size_t ch = 0; ch < channels.size(); ++ch)
            parts.push_back({channels[ch], channels[ch], kernel.mean_distances[ch]});
        return lte::fusion_gram(parts);
    }
    return lte::gram(kernel.descriptor, channels[0], channels[0]);
}

// ---------------------------------------------------------------- synth

struct SynthOpts {
    int classes = 8;
    int features = 16;
    int depth = 0;
    double separation = 4.0;
    double sigma = 0.5;
    int snippets = 20;
    int segments = 10;
    std::uint64_t seed = 0;
    std::string out;
    std::string tree_out;
};

void run_synth(const SynthOpts& o) {
    lte::SynthConfig config;
    config.num_classes = o.classes;
    config.feature_dim = o.features;
    if (o.depth > 0) {
        config.depth = o.depth;
    } else {
        config.depth = 0;
        while (config.depth < 30 && (1 << config.depth) < o.classes) ++config.depth;
        if (config.depth == 0) config.depth = 1;
    }
    config.separation = o.separation;
    config.sigma = o.sigma;
    config.snippets_per_class = o.snippets;
    config.segments_per_snippet = o.segments;
    config.seed = o.seed;

    const lte::SynthData data = lte::synth_hierarchy_dataset(config);
    lte::save_dataset(data.dataset, o.out);
    std::cout << "wrote " << o.out << " (" << data.dataset.num_classes << " classes, "
              << data.dataset.snippets.size() << " snippets)\n";
    if (!o.tree_out.empty()) {
        lte::save_label_tree(data.planted, o.tree_out);
        std::cout << "wrote " << o.tree_out << '\n';
    }
}

// ----------------------------------------------------------------- tree

struct TreeBuildOpts {
    std::string data;
    std::uint64_t seed = 0;
    std::string out;
    int trees = 200;
};

void run_tree_build(const TreeBuildOpts& o) {
    const lte::Dataset data = lte::load_dataset(o.data);
    lte::ForestConfig config;
    config.num_trees = o.trees;
    const lte::LabelTree tree = lte::build_label_tree(data, config, o.seed);
    lte::save_label_tree(tree, o.out);
    std::cout << "wrote " << o.out << " (" << tree.num_classes() << " leaves, "
              << tree.num_splits() << " splits)\n";
}

void run_tree_show(const std::string& path) {
    const lte::LabelTree tree = lte::load_label_tree(path);
    std::cout << tree.to_text();
}

// ------------------------------------------------------------------ lte

struct LteTrainOpts {
    std::string data;
    std::string tree;
    std::uint64_t seed = 0;
    std::string out;
    int trees = 200;
};

void run_lte_train(const LteTrainOpts& o) {
    const lte::Dataset data = lte::load_dataset(o.data);
    const lte::LabelTree tree = lte::load_label_tree(o.tree);
    lte::require(tree.label_names == data.label_names,
                 "tree label names do not match the dataset's");
    lte::ForestConfig config;
    config.num_trees = o.trees;
    const lte::LTEModel model =
        lte::train_lte(tree, lte::segments_of(data), config, o.seed);
    lte::save_lte_model(model, o.out);
    std::cout << "wrote " << o.out << " (" << model.classifiers.size()
              << " split classifiers, embedding dimension " << model.embedding_dim()
              << ")\n";
}

struct LteEmbedOpts {
    std::string data;
    std::string model;
    std::string tree;
    int folds = 10;
    std::uint64_t seed = 0;
    std::string out;
    int trees = 200;
};

void run_lte_embed(const LteEmbedOpts& o) {
    const lte::Dataset data = lte::load_dataset(o.data);
    std::vector<lte::SnippetEmbedding> rows;
    if (!o.model.empty()) {
        const lte::LTEModel model = lte::load_lte_model(o.model);
        lte::require(model.tree.label_names == data.label_names,
                     "model label names do not match the dataset's");
        rows = lte::embed_dataset(model, data);
    } else {
        const lte::LabelTree tree = lte::load_label_tree(o.tree);
        lte::require(tree.label_names == data.label_names,
                     "tree label names do not match the dataset's");
        lte::ForestConfig config;
        config.num_trees = o.trees;
        rows = lte::embed_dataset_out_of_fold(data, tree, config, o.folds, o.seed);
    }
    lte::save_embeddings(rows, data.label_names, o.out);
    std::cout << "wrote " << o.out << " (" << rows.size() << " rows, dimension "
              << rows.front().values.size() << ")\n";
}

// ------------------------------------------------------------ closeness

struct ClosenessOpts {
    std::string data;
    std::string aux_data;
    int top_n = 5;
    std::uint64_t seed = 0;
    std::string out;
    int trees = 200;
};

void run_closeness(const ClosenessOpts& o) {
    const lte::Dataset scene = lte::load_dataset(o.data);
    const lte::Dataset aux = lte::load_dataset(o.aux_data);

    lte::ForestConfig config;
    config.num_trees = o.trees;
    config.seed = o.seed;
    const lte::RandomForest scene_forest = lte::train_forest(lte::segments_of(scene), config);

    std::vector<std::pair<std::string, std::vector<lte::FeatureVector>>> aux_sets;
    for (int c = 1; c <= aux.num_classes; ++c)
        aux_sets.emplace_back(aux.label_names[c - 1], lte::segments_of(aux, {c}).features);
    const lte::ClosenessTable table = lte::closeness(scene_forest, aux_sets);
    const std::vector<std::vector<int>> top = lte::select_top_categories(table, o.top_n);

    nlohmann::json doc;
    doc["schema_version"] = "1.0";
    doc["kind"] = "closeness";
    std::vector<std::string> scene_names;
    for (int c : table.scene_classes) scene_names.push_back(scene.label_names[c - 1]);
    doc["scene_classes"] = scene_names;
    doc["categories"] = table.categories;
    nlohmann::json kappa = nlohmann::json::array();
    for (std::size_t r = 0; r < table.scene_classes.size(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t y = 0; y < table.categories.size(); ++y)
            row.push_back(table.kappa(r, y));
        kappa.push_back(std::move(row));
    }
    doc["kappa"] = std::move(kappa);
    doc["top_n"] = o.top_n;
    nlohmann::json selected = nlohmann::json::array();
    for (const std::vector<int>& cols : top) {
        nlohmann::json row = nlohmann::json::array();
        for (int col : cols) row.push_back(table.categories[col]);
        selected.push_back(std::move(row));
    }
    doc["selected"] = std::move(selected);
    write_json(o.out, doc);

    for (std::size_t r = 0; r < scene_names.size(); ++r) {
        std::cout << scene_names[r] << ":";
        for (int col : top[r]) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3f", table.kappa(r, col));
            std::cout << ' ' << table.categories[col] << " (" << buf << ")";
        }
        std::cout << '\n';
    }
    std::cout << "wrote " << o.out << '\n';
}

// ----------------------------------------------------------------- gram

struct GramOpts {
    std::vector<std::string> data;
    std::string kernel;
    double gamma = 0.0;
    std::string out;
};

void run_gram(const GramOpts& o) {
    const std::vector<lte::EmbeddedDataset> channels = load_channels(o.data);
    std::vector<std::vector<lte::FeatureVector>> rows;
    for (const lte::EmbeddedDataset& ch : channels) rows.push_back(values_of(ch));

    const lte::KernelKind kind = lte::kernel_kind_from_string(o.kernel);
    const TrainKernel kernel = resolve_train_kernel(kind, rows, o.gamma);
    lte::GramMatrix result = train_gram_for(kernel, rows);
    for (const lte::SnippetEmbedding& row : channels[0].rows)
        result.row_ids.push_back(row.snippet_id);
    result.col_ids = result.row_ids;
    lte::save_gram(result, o.out);
    std::cout << "wrote " << o.out << " (" << result.entries.rows() << " x "
              << result.entries.cols() << ")\n";
}

// ------------------------------------------------------------------ svm

std::vector<int> labels_of(const lte::EmbeddedDataset& data) {
    std::vector<int> labels;
    labels.reserve(data.rows.size());
    for (const lte::SnippetEmbedding& row : data.rows) labels.push_back(row.label);
    return labels;
}

struct SvmTuneOpts {
    std::vector<std::string> data;
    std::string kernel = "fusion";
    int folds = 10;
    std::uint64_t seed = 0;
    std::string out;
};

void run_svm_tune(const SvmTuneOpts& o) {
    const std::vector<lte::EmbeddedDataset> channels = load_channels(o.data);
    std::vector<std::vector<lte::FeatureVector>> rows;
    for (const lte::EmbeddedDataset& ch : channels) rows.push_back(values_of(ch));
    const std::vector<int> labels = labels_of(channels[0]);

    const lte::KernelKind kind = lte::kernel_kind_from_string(o.kernel);
    if (kind != lte::KernelKind::fusion)
        lte::require(rows.size() == 1,
                     "the " + lte::to_string(kind) +
                         " kernel takes exactly one --data file; use fusion for channels");
    const std::vector<double> c_grid = lte::default_c_grid();
    std::vector<double> gamma_grid;
    if (kind == lte::KernelKind::rbf) {
        const double base = lte::default_rbf_gamma(rows[0]);
        for (double m : lte::default_gamma_multipliers()) gamma_grid.push_back(m * base);
    }
    const double tol = 1e-3;
    const lte::TuneResult result = lte::tune_hyperparameters(rows, labels, kind, c_grid,
                                                             gamma_grid, o.folds, tol, o.seed);
    write_json(o.out, tune_to_json(result, kind, o.folds, tol, c_grid, gamma_grid));
    std::cout << "best C " << result.c_reg;
    if (kind == lte::KernelKind::rbf) std::cout << ", gamma " << result.gamma;
    std::cout << ", accuracy " << result.accuracy << '\n';
    std::cout << "wrote " << o.out << '\n';
}

struct SvmTrainOpts {
    std::vector<std::string> data;
    std::string kernel = "fusion";
    double c_reg = 0.0;
    double gamma = 0.0;
    double tol = 1e-3;
    std::string out;
};

void run_svm_train(const SvmTrainOpts& o) {
    const std::vector<lte::EmbeddedDataset> channels = load_channels(o.data);
    std::vector<std::vector<lte::FeatureVector>> rows;
    for (const lte::EmbeddedDataset& ch : channels) rows.push_back(values_of(ch));
    const std::vector<int> labels = labels_of(channels[0]);

    const lte::KernelKind kind = lte::kernel_kind_from_string(o.kernel);
    const TrainKernel kernel = resolve_train_kernel(kind, rows, o.gamma);
    const lte::GramMatrix train_gram = train_gram_for(kernel, rows);

    lte::SvmModel model;
    model.classifier = lte::train_ovo(train_gram.entries, labels, o.c_reg, o.tol);
    model.classifier.descriptor = train_gram.descriptor;
    model.channel_rows = rows;
    model.channel_mean_distances = kernel.mean_distances;
    model.label_names = channels[0].label_names;
    lte::save_svm_model(model, o.out);

    std::size_t support = 0;
    for (const lte::BinarySVM& svm : model.classifier.machines)
        support += svm.support().size();
    std::cout << "wrote " << o.out << " (" << model.classifier.machines.size()
              << " machines, " << support << " support vectors)\n";
}

struct SvmPredictOpts {
    std::string model;
    std::vector<std::string> data;
    std::string out;
};

void run_svm_predict(const SvmPredictOpts& o) {
    const lte::SvmModel model = lte::load_svm_model(o.model);
    const std::vector<lte::EmbeddedDataset> channels = load_channels(o.data);
    lte::require(channels.size() == model.channel_rows.size(),
                 "model expects " + std::to_string(model.channel_rows.size()) +
                     " channel(s), got " + std::to_string(channels.size()));
    std::vector<std::vector<lte::FeatureVector>> rows;
    for (const lte::EmbeddedDataset& ch : channels) rows.push_back(values_of(ch));

    const lte::GramMatrix test_gram = lte::model_test_gram(model, rows);
    const std::vector<int> predicted = lte::predict_ovo(model.classifier, test_gram.entries);

    std::ofstream out(o.out, std::ios::binary | std::ios::trunc);
    lte::require(out.good(), "cannot open file for writing: " + o.out);
    out << "snippet_id,label\n";
    for (std::size_t i = 0; i < predicted.size(); ++i)
        out << channels[0].rows[i].snippet_id << ','
            << model.label_names[predicted[i] - 1] << '\n';
    lte::require(out.good(), "failed writing file: " + o.out);
    std::cout << "wrote " << o.out << " (" << predicted.size() << " predictions)\n";
}

// ----------------------------------------------------------------- eval

struct EvalOpts {
    std::string truth;
    std::string pred;
    std::string out;
};

void run_eval(const EvalOpts& o) {
    const auto truth = read_labeled_ids(o.truth);
    const auto pred = read_labeled_ids(o.pred);
    lte::require(truth.size() == pred.size(),
                 "truth and prediction files cover different snippet counts");
    std::map<std::string, std::string> pred_map(pred.begin(), pred.end());

    std::set<std::string> name_set;
    for (const auto& [id, name] : truth) name_set.insert(name);
    for (const auto& [id, name] : pred) name_set.insert(name);
    const std::vector<std::string> names(name_set.begin(), name_set.end());
    lte::require(names.size() >= 2, "need at least 2 classes to score");
    std::map<std::string, int> class_of;
    for (std::size_t c = 0; c < names.size(); ++c)
        class_of[names[c]] = static_cast<int>(c) + 1;

    std::vector<int> y_true, y_pred;
    for (const auto& [id, name] : truth) {
        const auto it = pred_map.find(id);
        lte::require(it != pred_map.end(), "no prediction for snippet '" + id + "'");
        y_true.push_back(class_of[name]);
        y_pred.push_back(class_of[it->second]);
    }
    const lte::MetricsReport report =
        lte::compute_metrics(y_true, y_pred, static_cast<int>(names.size()));
    std::cout << lte::metrics_table(report, names);
    if (!o.out.empty()) {
        lte::save_metrics(report, names, o.out);
        std::cout << "wrote " << o.out << '\n';
    }
}

// ------------------------------------------------------------------ run

struct RunOpts {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    int jobs = 0; // 0 = take the config's value
};

void run_run(const RunOpts& o) {
    lte::ExperimentConfig config = lte::load_experiment_config(o.config);
    config.seed = o.seed;
    if (!o.out.empty()) config.out_dir = o.out;
    if (o.jobs > 0) config.jobs = o.jobs;
    lte::require(!config.out_dir.empty(),
                 "output directory not set (pass --out or set [run] out)");
    lte::run_experiment(config);

    std::ifstream table(std::filesystem::path(config.out_dir) / "metrics.txt");
    lte::require(table.good(), "run finished but metrics.txt is missing");
    std::cout << table.rdbuf();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learns a binary label tree from classifier confusion, embeds samples "
                 "into meta-class likelihoods, and classifies with one-vs-one kernel "
                 "SVMs."};
    app.require_subcommand(1);

    {
        auto o = std::make_shared<SynthOpts>();
        CLI::App* sub = app.add_subcommand("synth", "Generate a planted-hierarchy dataset");
        sub->add_option("--classes", o->classes, "number of classes (a power of two)")
            ->capture_default_str();
        sub->add_option("--features", o->features, "feature dimension")->capture_default_str();
        sub->add_option("--depth", o->depth, "hierarchy depth (default: log2 of --classes)");
        sub->add_option("--separation", o->separation, "sibling distance scale")
            ->capture_default_str();
        sub->add_option("--sigma", o->sigma, "within-class standard deviation")
            ->capture_default_str();
        sub->add_option("--snippets", o->snippets, "snippets per class")->capture_default_str();
        sub->add_option("--segments", o->segments, "segments per snippet")
            ->capture_default_str();
        sub->add_option("--seed", o->seed, "RNG seed")->required();
        sub->add_option("--out", o->out, "output dataset CSV")->required();
        sub->add_option("--tree-out", o->tree_out, "also write the planted tree JSON");
        sub->callback([o] { run_synth(*o); });
    }

    CLI::App* tree = app.add_subcommand("tree", "Label tree operations");
    tree->require_subcommand(1);
    {
        auto o = std::make_shared<TreeBuildOpts>();
        CLI::App* sub = tree->add_subcommand("build", "Learn a label tree from a dataset");
        sub->add_option("--data", o->data, "training dataset CSV")->required();
        sub->add_option("--seed", o->seed, "RNG seed")->required();
        sub->add_option("--out", o->out, "output tree JSON")->required();
        sub->add_option("--trees", o->trees, "trees per random forest")->capture_default_str();
        sub->callback([o] { run_tree_build(*o); });
    }
    {
        auto path = std::make_shared<std::string>();
        CLI::App* sub = tree->add_subcommand("show", "Print a tree file as indented text");
        sub->add_option("--tree", *path, "tree JSON file")->required();
        sub->callback([path] { run_tree_show(*path); });
    }

    CLI::App* lte_cmd = app.add_subcommand("lte", "Label tree embedding models");
    lte_cmd->require_subcommand(1);
    {
        auto o = std::make_shared<LteTrainOpts>();
        CLI::App* sub =
            lte_cmd->add_subcommand("train", "Train the per-split classifiers of a tree");
        sub->add_option("--data", o->data, "training dataset CSV")->required();
        sub->add_option("--tree", o->tree, "label tree JSON")->required();
        sub->add_option("--seed", o->seed, "RNG seed")->required();
        sub->add_option("--out", o->out, "output model JSON")->required();
        sub->add_option("--trees", o->trees, "trees per random forest")->capture_default_str();
        sub->callback([o] { run_lte_train(*o); });
    }
    {
        auto o = std::make_shared<LteEmbedOpts>();
        CLI::App* sub = lte_cmd->add_subcommand(
            "embed", "Embed a dataset with a model, or out of fold with --tree");
        sub->add_option("--data", o->data, "dataset CSV to embed")->required();
        CLI::Option* model = sub->add_option("--model", o->model, "trained model JSON");
        CLI::Option* tree_opt =
            sub->add_option("--tree", o->tree, "tree JSON for out-of-fold embedding");
        CLI::Option* folds =
            sub->add_option("--folds", o->folds, "out-of-fold fold count")
                ->capture_default_str();
        CLI::Option* seed = sub->add_option("--seed", o->seed, "RNG seed (out of fold)");
        CLI::Option* trees =
            sub->add_option("--trees", o->trees, "trees per random forest")
                ->capture_default_str();
        sub->add_option("--out", o->out, "output embeddings CSV")->required();
        model->excludes(tree_opt);
        tree_opt->needs(seed);
        seed->needs(tree_opt);
        folds->needs(tree_opt);
        trees->needs(tree_opt);
        sub->callback([o, model, tree_opt] {
            if (model->count() == 0 && tree_opt->count() == 0)
                throw CLI::RequiredError("one of --model or --tree");
            run_lte_embed(*o);
        });
    }

    {
        auto o = std::make_shared<ClosenessOpts>();
        CLI::App* sub = app.add_subcommand(
            "closeness", "Rank auxiliary categories by closeness to each scene class");
        sub->add_option("--data", o->data, "scene training dataset CSV")->required();
        sub->add_option("--aux-data", o->aux_data, "auxiliary dataset CSV")->required();
        sub->add_option("--top-n", o->top_n, "categories to keep per scene class")
            ->capture_default_str();
        sub->add_option("--seed", o->seed, "RNG seed")->required();
        sub->add_option("--out", o->out, "output closeness JSON")->required();
        sub->add_option("--trees", o->trees, "trees per random forest")->capture_default_str();
        sub->callback([o] { run_closeness(*o); });
    }

    {
        auto o = std::make_shared<GramOpts>();
        CLI::App* sub = app.add_subcommand("gram", "Kernel matrix of an embedding file");
        sub->add_option("--data", o->data, "embeddings CSV (repeat for fusion channels)")
            ->required();
        sub->add_option("--kernel", o->kernel, "kernel kind")
            ->required()
            ->check(CLI::IsMember(kKernelNames));
        sub->add_option("--gamma", o->gamma, "rbf bandwidth (default: variance heuristic)");
        sub->add_option("--out", o->out, "output Gram CSV")->required();
        sub->callback([o] { run_gram(*o); });
    }

    CLI::App* svm = app.add_subcommand("svm", "One-vs-one SVM over embeddings");
    svm->require_subcommand(1);
    {
        auto o = std::make_shared<SvmTuneOpts>();
        CLI::App* sub =
            svm->add_subcommand("tune", "Cross-validated grid search for C (and gamma)");
        sub->add_option("--data", o->data, "embeddings CSV (repeat for fusion channels)")
            ->required();
        sub->add_option("--kernel", o->kernel, "kernel kind")
            ->capture_default_str()
            ->check(CLI::IsMember(kKernelNames));
        sub->add_option("--folds", o->folds, "cross-validation folds")->capture_default_str();
        sub->add_option("--seed", o->seed, "RNG seed")->required();
        sub->add_option("--out", o->out, "output tuning JSON")->required();
        sub->callback([o] { run_svm_tune(*o); });
    }
    {
        auto o = std::make_shared<SvmTrainOpts>();
        CLI::App* sub = svm->add_subcommand("train", "Train the one-vs-one classifier");
        sub->add_option("--data", o->data, "embeddings CSV (repeat for fusion channels)")
            ->required();
        sub->add_option("--kernel", o->kernel, "kernel kind")
            ->capture_default_str()
            ->check(CLI::IsMember(kKernelNames));
        sub->add_option("--c", o->c_reg, "regularization C")->required();
        sub->add_option("--gamma", o->gamma, "rbf bandwidth (default: variance heuristic)");
        sub->add_option("--tol", o->tol, "solver stopping tolerance")->capture_default_str();
        sub->add_option("--out", o->out, "output model JSON")->required();
        sub->callback([o] { run_svm_train(*o); });
    }
    {
        auto o = std::make_shared<SvmPredictOpts>();
        CLI::App* sub = svm->add_subcommand("predict", "Predict labels for embeddings");
        sub->add_option("--model", o->model, "trained SVM model JSON")->required();
        sub->add_option("--data", o->data, "embeddings CSV (repeat for fusion channels)")
            ->required();
        sub->add_option("--out", o->out, "output predictions CSV")->required();
        sub->callback([o] { run_svm_predict(*o); });
    }

    {
        auto o = std::make_shared<EvalOpts>();
        CLI::App* sub = app.add_subcommand(
            "eval", "Score predictions against ground truth (by snippet_id)");
        sub->add_option("--truth", o->truth, "CSV with true labels")->required();
        sub->add_option("--pred", o->pred, "CSV with predicted labels")->required();
        sub->add_option("--out", o->out, "also write metrics JSON here");
        sub->callback([o] { run_eval(*o); });
    }

    {
        auto o = std::make_shared<RunOpts>();
        CLI::App* sub = app.add_subcommand("run", "Run the full pipeline from a config file");
        sub->add_option("--config", o->config, "experiment config file")->required();
        sub->add_option("--seed", o->seed, "master RNG seed")->required();
        sub->add_option("--out", o->out, "output directory (overrides [run] out)");
        sub->add_option("--jobs", o->jobs, "worker thread cap (overrides [run] jobs)");
        sub->callback([o] { run_run(*o); });
    }

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const lte::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const lte::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
