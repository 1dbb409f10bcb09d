#include "lte/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "io_util.hpp"
#include "lte/embedding.hpp"
#include "lte/error.hpp"
#include "lte/label_tree.hpp"
#include "lte/parallel.hpp"
#include "lte/rng.hpp"
#include "serde_util.hpp"

namespace lte {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

using SectionMap = std::map<std::string, std::string>;

/// Raw sectioned key = value file. Lines starting with '#' are comments;
/// duplicate keys within a section are rejected, reopening a section is
/// allowed.
std::map<std::string, SectionMap> read_raw_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::map<std::string, SectionMap> sections;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        const std::string where = path + ":" + std::to_string(line_no);
        if (text.empty() || text[0] == '#') continue;
        if (text.front() == '[') {
            require(text.back() == ']', "config: malformed section header at " + where);
            section = trim(text.substr(1, text.size() - 2));
            require(!section.empty(), "config: empty section name at " + where);
            sections.try_emplace(section);
            continue;
        }
        const std::size_t eq = text.find('=');
        require(eq != std::string::npos, "config: expected key = value at " + where);
        require(!section.empty(), "config: key outside any section at " + where);
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        require(!key.empty(), "config: empty key at " + where);
        require(sections[section].emplace(key, value).second,
                "config: duplicate key '" + key + "' at " + where);
    }
    return sections;
}

void check_known_keys(const SectionMap& kv, const std::set<std::string>& allowed,
                      const std::string& section) {
    for (const auto& [key, value] : kv)
        require(allowed.count(key) != 0,
                "config: unknown key '" + key + "' in [" + section + "]");
}

const std::string& want(const SectionMap& kv, const std::string& key,
                        const std::string& section) {
    const auto it = kv.find(key);
    require(it != kv.end(), "config: [" + section + "] is missing '" + key + "'");
    return it->second;
}

long get_long(const SectionMap& kv, const std::string& key, const std::string& section,
              long fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    return io::parse_long(it->second, "config [" + section + "] " + key);
}

double get_double(const SectionMap& kv, const std::string& key, const std::string& section,
                  double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    return io::parse_double(it->second, "config [" + section + "] " + key);
}

bool get_bool(const SectionMap& kv, const std::string& key, const std::string& section,
              bool fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ValidationError("config [" + section + "] " + key + " must be true or false");
}

std::vector<double> get_double_list(const SectionMap& kv, const std::string& key,
                                    const std::string& section,
                                    const std::vector<double>& fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::vector<double> out;
    for (const std::string& item : split_list(it->second))
        out.push_back(io::parse_double(item, "config [" + section + "] " + key));
    return out;
}

/// Paths in the config resolve against the config file's directory, so a
/// config travels with its data.
std::string resolve_path(const fs::path& base, const std::string& p) {
    const fs::path q(p);
    return (q.is_absolute() ? q : base / q).lexically_normal().string();
}

template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const NumericError& e) {
        throw NumericError("stage " + name + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError("stage " + name + ": " + e.what());
    } catch (const fs::filesystem_error& e) {
        throw ValidationError("stage " + name + ": " + std::string(e.what()));
    }
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, "cannot create directory '" + dir.string() + "'");
}

/// Remaps ds labels onto the reference name -> id assignment. The name
/// sets must match exactly.
void align_label_space(Dataset& ds, const std::vector<std::string>& names,
                       const std::string& what) {
    require(ds.num_classes == static_cast<int>(names.size()),
            what + " has " + std::to_string(ds.num_classes) + " classes, expected " +
                std::to_string(names.size()));
    std::map<std::string, int> index;
    for (std::size_t c = 0; c < names.size(); ++c)
        index[names[c]] = static_cast<int>(c) + 1;
    std::vector<int> remap(ds.num_classes + 1, 0);
    for (int c = 1; c <= ds.num_classes; ++c) {
        const auto it = index.find(ds.label_names[c - 1]);
        require(it != index.end(),
                what + " has unknown class '" + ds.label_names[c - 1] + "'");
        remap[c] = it->second;
    }
    for (Snippet& sn : ds.snippets) sn.label = remap[sn.label];
    ds.label_names = names;
}

void check_alignment(const Dataset& a, const Dataset& b, const std::string& channel,
                     const std::string& which) {
    require(a.snippets.size() == b.snippets.size(),
            "channel '" + channel + "' " + which + " set has a different snippet count");
    for (std::size_t i = 0; i < a.snippets.size(); ++i) {
        require(a.snippets[i].id == b.snippets[i].id,
                "channel '" + channel + "' " + which + " snippet order differs at '" +
                    a.snippets[i].id + "'");
        require(a.snippets[i].label == b.snippets[i].label,
                "channel '" + channel + "' " + which + " label differs for snippet '" +
                    a.snippets[i].id + "'");
    }
}

/// Sub-dataset over the given class ids, remapped to 1..K in keep order
/// (keep must be sorted ascending).
Dataset restrict_to_labels(const Dataset& ds, const std::vector<int>& keep) {
    Dataset out;
    out.feature_dim = ds.feature_dim;
    out.num_classes = static_cast<int>(keep.size());
    std::vector<int> remap(ds.num_classes + 1, 0);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.label_names.push_back(ds.label_names[keep[i] - 1]);
        remap[keep[i]] = static_cast<int>(i) + 1;
    }
    for (const Snippet& sn : ds.snippets) {
        if (remap[sn.label] == 0) continue;
        Snippet copy = sn;
        copy.label = remap[sn.label];
        out.snippets.push_back(std::move(copy));
    }
    out.validate();
    return out;
}

std::vector<FeatureVector> values_of(const std::vector<SnippetEmbedding>& rows) {
    std::vector<FeatureVector> out;
    out.reserve(rows.size());
    for (const SnippetEmbedding& row : rows) out.push_back(row.values);
    return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open file for writing: " + path.string());
    out << text;
    require(out.good(), "failed writing file: " + path.string());
}

} // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    const std::map<std::string, SectionMap> sections = read_raw_config(path);
    const fs::path base = fs::absolute(fs::path(path)).parent_path();

    ExperimentConfig config;

    for (const auto& [name, kv] : sections) {
        if (name == "run" || name == "channels" || name == "forest" ||
            name == "embedding" || name == "svm" || name.rfind("channel:", 0) == 0)
            continue;
        throw ValidationError("config: unknown section [" + name + "]");
    }

    const auto channels_it = sections.find("channels");
    require(channels_it != sections.end(), "config: missing [channels] section");
    check_known_keys(channels_it->second, {"list"}, "channels");
    const std::vector<std::string> names =
        split_list(want(channels_it->second, "list", "channels"));
    require(!names.empty(), "config: channel list is empty");
    std::set<std::string> listed;
    for (const std::string& name : names) {
        require(listed.insert(name).second, "config: duplicate channel '" + name + "'");
        for (char ch : name)
            require(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-',
                    "config: channel name '" + name +
                        "' may only use letters, digits, '_' and '-'");
    }
    for (const auto& [name, kv] : sections) {
        if (name.rfind("channel:", 0) != 0) continue;
        require(listed.count(name.substr(8)) != 0,
                "config: section [" + name + "] is not in the channel list");
    }

    for (const std::string& name : names) {
        const auto it = sections.find("channel:" + name);
        require(it != sections.end(), "config: missing section [channel:" + name + "]");
        const SectionMap& kv = it->second;
        const std::string section = "channel:" + name;
        check_known_keys(kv, {"kind", "train", "test", "aux_data", "top_n"}, section);

        ChannelConfig ch;
        ch.name = name;
        const std::string& kind = want(kv, "kind", section);
        if (kind == "scene") {
            ch.is_aux = false;
            require(kv.count("aux_data") == 0 && kv.count("top_n") == 0,
                    "config: aux_data and top_n only apply to aux channels ([" + section +
                        "])");
        } else if (kind == "aux") {
            ch.is_aux = true;
            ch.aux_data_path = resolve_path(base, want(kv, "aux_data", section));
            const long top_n = get_long(kv, "top_n", section, ch.top_n);
            require(top_n >= 1, "config: [" + section + "] top_n must be >= 1");
            ch.top_n = static_cast<int>(top_n);
        } else {
            throw ValidationError("config: [" + section + "] kind must be scene or aux");
        }
        ch.train_path = resolve_path(base, want(kv, "train", section));
        ch.test_path = resolve_path(base, want(kv, "test", section));
        config.channels.push_back(std::move(ch));
    }

    if (const auto it = sections.find("forest"); it != sections.end()) {
        const SectionMap& kv = it->second;
        check_known_keys(
            kv, {"num_trees", "max_depth", "min_leaf", "features_per_split", "bootstrap"},
            "forest");
        config.forest.num_trees =
            static_cast<int>(get_long(kv, "num_trees", "forest", config.forest.num_trees));
        config.forest.max_depth =
            static_cast<int>(get_long(kv, "max_depth", "forest", config.forest.max_depth));
        config.forest.min_leaf =
            static_cast<int>(get_long(kv, "min_leaf", "forest", config.forest.min_leaf));
        config.forest.features_per_split = static_cast<int>(
            get_long(kv, "features_per_split", "forest", config.forest.features_per_split));
        config.forest.bootstrap = get_bool(kv, "bootstrap", "forest", config.forest.bootstrap);
    }

    if (const auto it = sections.find("embedding"); it != sections.end()) {
        check_known_keys(it->second, {"folds"}, "embedding");
        config.embedding_folds = static_cast<int>(
            get_long(it->second, "folds", "embedding", config.embedding_folds));
    }

    bool gamma_explicit = false;
    if (const auto it = sections.find("svm"); it != sections.end()) {
        const SectionMap& kv = it->second;
        check_known_keys(kv, {"kernel", "c_grid", "gamma_grid", "folds", "tol"}, "svm");
        if (kv.count("kernel") != 0)
            config.kernel = kernel_kind_from_string(kv.at("kernel"));
        config.c_grid = get_double_list(kv, "c_grid", "svm", config.c_grid);
        gamma_explicit = kv.count("gamma_grid") != 0;
        config.gamma_multipliers =
            get_double_list(kv, "gamma_grid", "svm", config.gamma_multipliers);
        config.svm_folds =
            static_cast<int>(get_long(kv, "folds", "svm", config.svm_folds));
        config.svm_tol = get_double(kv, "tol", "svm", config.svm_tol);
    }

    if (const auto it = sections.find("run"); it != sections.end()) {
        const SectionMap& kv = it->second;
        check_known_keys(kv, {"out", "jobs"}, "run");
        if (kv.count("out") != 0) config.out_dir = resolve_path(base, kv.at("out"));
        config.jobs = static_cast<int>(get_long(kv, "jobs", "run", config.jobs));
    }

    if (config.kernel != KernelKind::fusion)
        require(config.channels.size() == 1,
                "config: the " + to_string(config.kernel) +
                    " kernel takes exactly one channel; use fusion for multi-channel runs");
    if (gamma_explicit && config.kernel != KernelKind::rbf)
        throw ValidationError("config: gamma_grid only applies to the rbf kernel");
    require(config.embedding_folds >= 2, "config: embedding folds must be >= 2");
    require(config.svm_folds >= 2, "config: svm folds must be >= 2");
    require(config.svm_tol > 0.0, "config: svm tol must be > 0");
    require(!config.c_grid.empty(), "config: c_grid is empty");
    for (double c : config.c_grid) require(c > 0.0, "config: c_grid values must be > 0");
    for (double g : config.gamma_multipliers)
        require(g > 0.0, "config: gamma_grid values must be > 0");
    require(config.jobs >= 1, "config: jobs must be >= 1");

    for (const ChannelConfig& ch : config.channels) {
        require(fs::exists(ch.train_path), "config: channel '" + ch.name +
                                               "' train path does not exist: " + ch.train_path);
        require(fs::exists(ch.test_path), "config: channel '" + ch.name +
                                              "' test path does not exist: " + ch.test_path);
        if (ch.is_aux)
            require(fs::exists(ch.aux_data_path),
                    "config: channel '" + ch.name +
                        "' aux_data path does not exist: " + ch.aux_data_path);
    }
    return config;
}

MetricsReport run_experiment(const ExperimentConfig& config) {
    stage("config", [&] {
        require(!config.channels.empty(), "no channels configured");
        require(!config.out_dir.empty(), "output directory not set");
        require(config.jobs >= 1, "jobs must be >= 1");
        if (config.kernel != KernelKind::fusion)
            require(config.channels.size() == 1, "multi-channel runs need the fusion kernel");
        require(config.embedding_folds >= 2, "embedding folds must be >= 2");
        require(config.svm_folds >= 2, "svm folds must be >= 2");
        require(config.svm_tol > 0.0, "svm tol must be > 0");
        return 0;
    });
    set_max_threads(config.jobs);

    const std::size_t num_channels = config.channels.size();
    const fs::path out(config.out_dir);
    stage("artifacts", [&] {
        for (const ChannelConfig& ch : config.channels) make_dirs(out / "channels" / ch.name);
        return 0;
    });
    std::vector<std::string> artifacts;

    std::vector<Dataset> trains(num_channels);
    std::vector<Dataset> tests(num_channels);
    std::vector<Dataset> auxes(num_channels);
    for (std::size_t i = 0; i < num_channels; ++i) {
        const ChannelConfig& ch = config.channels[i];
        stage("load channel " + ch.name, [&] {
            trains[i] = load_dataset(ch.train_path);
            tests[i] = load_dataset(ch.test_path);
            require(trains[i].feature_dim == tests[i].feature_dim,
                    "train and test feature dimensions differ");
            align_label_space(tests[i], trains[i].label_names, "test set");
            if (i > 0) {
                align_label_space(trains[i], trains[0].label_names, "train set");
                align_label_space(tests[i], trains[0].label_names, "test set");
            }
            if (ch.is_aux) {
                auxes[i] = load_dataset(ch.aux_data_path);
                require(auxes[i].feature_dim == trains[i].feature_dim,
                        "aux data feature dimension differs from the channel's");
            }
            return 0;
        });
    }
    stage("align channels", [&] {
        for (std::size_t i = 1; i < num_channels; ++i) {
            check_alignment(trains[0], trains[i], config.channels[i].name, "train");
            check_alignment(tests[0], tests[i], config.channels[i].name, "test");
        }
        return 0;
    });

    std::vector<std::vector<FeatureVector>> train_channels(num_channels);
    std::vector<std::vector<FeatureVector>> test_channels(num_channels);
    for (std::size_t i = 0; i < num_channels; ++i) {
        const ChannelConfig& ch = config.channels[i];
        const fs::path dir = out / "channels" / ch.name;
        const std::string rel = "channels/" + ch.name + "/";
        const std::uint64_t ch_seed = derive_seed(config.seed, "channel " + ch.name);

        std::vector<SnippetEmbedding> train_rows, test_rows;
        if (!ch.is_aux) {
            const LabelTree tree = stage("channel " + ch.name + " tree", [&] {
                LabelTree t =
                    build_label_tree(trains[i], config.forest, derive_seed(ch_seed, "tree"));
                save_label_tree(t, (dir / "tree.json").string());
                return t;
            });
            artifacts.push_back(rel + "tree.json");
            train_rows = stage("channel " + ch.name + " train embeddings", [&] {
                return embed_dataset_out_of_fold(trains[i], tree, config.forest,
                                                 config.embedding_folds,
                                                 derive_seed(ch_seed, "oof"));
            });
            const LTEModel model = stage("channel " + ch.name + " model", [&] {
                LTEModel m = train_lte(tree, segments_of(trains[i]), config.forest,
                                       derive_seed(ch_seed, "lte"));
                save_lte_model(m, (dir / "lte_model.json").string());
                return m;
            });
            artifacts.push_back(rel + "lte_model.json");
            test_rows = stage("channel " + ch.name + " test embeddings",
                              [&] { return embed_dataset(model, tests[i]); });
        } else {
            const RandomForest scene_forest =
                stage("channel " + ch.name + " scene forest", [&] {
                    ForestConfig cfg = config.forest;
                    cfg.seed = derive_seed(ch_seed, "scene forest");
                    return train_forest(segments_of(trains[i]), cfg);
                });
            const ClosenessTable table = stage("channel " + ch.name + " closeness", [&] {
                std::vector<std::pair<std::string, std::vector<FeatureVector>>> aux_sets;
                for (int c = 1; c <= auxes[i].num_classes; ++c)
                    aux_sets.emplace_back(auxes[i].label_names[c - 1],
                                          segments_of(auxes[i], {c}).features);
                return closeness(scene_forest, aux_sets);
            });
            const std::vector<int> kept = stage("channel " + ch.name + " selection", [&] {
                const std::vector<std::vector<int>> top =
                    select_top_categories(table, ch.top_n);
                std::vector<int> keep;
                for (const std::vector<int>& cols : top)
                    for (int col : cols) keep.push_back(col + 1);
                std::sort(keep.begin(), keep.end());
                keep.erase(std::unique(keep.begin(), keep.end()), keep.end());

                nlohmann::json doc;
                doc["schema_version"] = serde::kSchemaVersion;
                doc["kind"] = "closeness";
                std::vector<std::string> scene_names;
                for (int c : table.scene_classes)
                    scene_names.push_back(trains[i].label_names[c - 1]);
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
                doc["top_n"] = ch.top_n;
                nlohmann::json selected = nlohmann::json::array();
                for (const std::vector<int>& cols : top) {
                    nlohmann::json row = nlohmann::json::array();
                    for (int col : cols) row.push_back(table.categories[col]);
                    selected.push_back(std::move(row));
                }
                doc["selected"] = std::move(selected);
                nlohmann::json kept_names = nlohmann::json::array();
                for (int id : keep) kept_names.push_back(table.categories[id - 1]);
                doc["kept_categories"] = std::move(kept_names);
                serde::write_json_file((dir / "closeness.json").string(), doc);
                return keep;
            });
            artifacts.push_back(rel + "closeness.json");

            const Dataset aux_restricted =
                stage("channel " + ch.name + " selection",
                      [&] { return restrict_to_labels(auxes[i], kept); });
            const LabelTree aux_tree = stage("channel " + ch.name + " aux tree", [&] {
                LabelTree t = build_label_tree(aux_restricted, config.forest,
                                               derive_seed(ch_seed, "aux tree"));
                save_label_tree(t, (dir / "aux_tree.json").string());
                return t;
            });
            artifacts.push_back(rel + "aux_tree.json");
            const LTEModel aux_model = stage("channel " + ch.name + " aux model", [&] {
                LTEModel m = train_lte(aux_tree, segments_of(aux_restricted), config.forest,
                                       derive_seed(ch_seed, "aux lte"));
                save_lte_model(m, (dir / "aux_lte_model.json").string());
                return m;
            });
            artifacts.push_back(rel + "aux_lte_model.json");
            // Aux classifiers never see scene snippets, so training data
            // embeds directly without the out-of-fold detour.
            train_rows = stage("channel " + ch.name + " train embeddings",
                               [&] { return embed_dataset(aux_model, trains[i]); });
            test_rows = stage("channel " + ch.name + " test embeddings",
                              [&] { return embed_dataset(aux_model, tests[i]); });
        }

        stage("channel " + ch.name + " embeddings", [&] {
            save_embeddings(train_rows, trains[i].label_names,
                            (dir / "train_embeddings.csv").string());
            save_embeddings(test_rows, tests[i].label_names,
                            (dir / "test_embeddings.csv").string());
            return 0;
        });
        artifacts.push_back(rel + "train_embeddings.csv");
        artifacts.push_back(rel + "test_embeddings.csv");
        train_channels[i] = values_of(train_rows);
        test_channels[i] = values_of(test_rows);
    }

    const std::vector<int> labels = snippet_labels(trains[0]);
    std::vector<double> gamma_grid;
    if (config.kernel == KernelKind::rbf) {
        const double base_gamma = default_rbf_gamma(train_channels[0]);
        for (double m : config.gamma_multipliers) gamma_grid.push_back(m * base_gamma);
    }
    const TuneResult tuned = stage("tune", [&] {
        TuneResult result = tune_hyperparameters(train_channels, labels, config.kernel,
                                                 config.c_grid, gamma_grid, config.svm_folds,
                                                 config.svm_tol,
                                                 derive_seed(config.seed, "tune"));
        nlohmann::json doc;
        doc["schema_version"] = serde::kSchemaVersion;
        doc["kind"] = "tune";
        doc["kernel"] = to_string(config.kernel);
        doc["folds"] = config.svm_folds;
        doc["tol"] = config.svm_tol;
        doc["c_grid"] = config.c_grid;
        doc["gamma_grid"] = gamma_grid;
        doc["best"] = {{"c_reg", result.c_reg},
                       {"gamma", result.gamma},
                       {"accuracy", result.accuracy}};
        nlohmann::json table = nlohmann::json::array();
        for (const TuneEntry& entry : result.table)
            table.push_back({{"c_reg", entry.c_reg},
                             {"gamma", entry.gamma},
                             {"accuracy", entry.accuracy}});
        doc["table"] = std::move(table);
        serde::write_json_file((out / "tune.json").string(), doc);
        return result;
    });
    artifacts.push_back("tune.json");

    SvmModel model;
    model.channel_rows = train_channels;
    model.channel_mean_distances.assign(num_channels, 0.0);
    model.label_names = trains[0].label_names;
    stage("train svm", [&] {
        KernelDescriptor desc;
        desc.kind = config.kernel;
        desc.gamma = tuned.gamma;
        GramMatrix train_gram;
        if (config.kernel == KernelKind::fusion) {
            std::vector<Channel> channels;
            for (std::size_t ch = 0; ch < num_channels; ++ch) {
                model.channel_mean_distances[ch] = mean_chi2(train_channels[ch]);
                channels.push_back({train_channels[ch], train_channels[ch],
                                    model.channel_mean_distances[ch]});
            }
            train_gram = fusion_gram(channels);
        } else {
            if (config.kernel == KernelKind::chi2) {
                model.channel_mean_distances[0] = mean_chi2(train_channels[0]);
                desc.mean_distance = model.channel_mean_distances[0];
            }
            train_gram = gram(desc, train_channels[0], train_channels[0]);
        }
        model.classifier = train_ovo(train_gram.entries, labels, tuned.c_reg, config.svm_tol);
        model.classifier.descriptor = train_gram.descriptor;
        save_svm_model(model, (out / "svm_model.json").string());
        return 0;
    });
    artifacts.push_back("svm_model.json");

    std::vector<int> predicted;
    stage("predict", [&] {
        const GramMatrix test_gram = model_test_gram(model, test_channels);
        predicted = predict_ovo(model.classifier, test_gram.entries);
        std::string text = "snippet_id,label\n";
        for (std::size_t t = 0; t < predicted.size(); ++t) {
            text += tests[0].snippets[t].id;
            text += ',';
            text += trains[0].label_names[predicted[t] - 1];
            text += '\n';
        }
        write_text_file(out / "predictions.csv", text);
        return 0;
    });
    artifacts.push_back("predictions.csv");

    MetricsReport report;
    stage("metrics", [&] {
        report = compute_metrics(snippet_labels(tests[0]), predicted, trains[0].num_classes);
        save_metrics(report, trains[0].label_names, (out / "metrics.json").string());
        write_text_file(out / "metrics.txt", metrics_table(report, trains[0].label_names));
        return 0;
    });
    artifacts.push_back("metrics.json");
    artifacts.push_back("metrics.txt");

    // The manifest echoes the algorithmic configuration only: jobs and the
    // output location must not change artifact bytes.
    stage("manifest", [&] {
        nlohmann::json doc;
        doc["schema_version"] = serde::kSchemaVersion;
        doc["kind"] = "manifest";
        doc["seed"] = config.seed;
        doc["kernel"] = to_string(config.kernel);
        doc["c_grid"] = config.c_grid;
        if (config.kernel == KernelKind::rbf) doc["gamma_multipliers"] = config.gamma_multipliers;
        doc["svm_folds"] = config.svm_folds;
        doc["svm_tol"] = config.svm_tol;
        doc["embedding_folds"] = config.embedding_folds;
        doc["forest"] = {{"num_trees", config.forest.num_trees},
                         {"max_depth", config.forest.max_depth},
                         {"min_leaf", config.forest.min_leaf},
                         {"features_per_split", config.forest.features_per_split},
                         {"bootstrap", config.forest.bootstrap}};
        nlohmann::json channels = nlohmann::json::array();
        for (const ChannelConfig& ch : config.channels) {
            nlohmann::json entry;
            entry["name"] = ch.name;
            entry["kind"] = ch.is_aux ? "aux" : "scene";
            entry["train"] = ch.train_path;
            entry["test"] = ch.test_path;
            if (ch.is_aux) {
                entry["aux_data"] = ch.aux_data_path;
                entry["top_n"] = ch.top_n;
            }
            channels.push_back(std::move(entry));
        }
        doc["channels"] = std::move(channels);
        artifacts.push_back("manifest.json");
        std::sort(artifacts.begin(), artifacts.end());
        doc["artifacts"] = artifacts;
        doc["accuracy"] = report.accuracy;
        serde::write_json_file((out / "manifest.json").string(), doc);
        return 0;
    });
    return report;
}

} // namespace lte
