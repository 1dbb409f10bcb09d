#include "lte/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "lte/error.hpp"
#include "lte/parallel.hpp"
#include "lte/rng.hpp"
#include "serde_util.hpp"

namespace lte {

double BinarySVM::decision(const Matrix& test_gram, std::size_t row) const {
    double total = bias;
    for (std::size_t t = 0; t < alpha.size(); ++t) {
        if (alpha[t] == 0.0) continue;
        total += alpha[t] * y[t] * test_gram(row, sample_indices[t]);
    }
    return total;
}

std::vector<std::size_t> BinarySVM::support() const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < alpha.size(); ++t)
        if (alpha[t] > 0.0) out.push_back(sample_indices[t]);
    return out;
}

BinarySVM train_binary_svm(const Matrix& gram, const std::vector<int>& y, double c_reg,
                           double tol, std::uint64_t max_updates) {
    const std::size_t n = y.size();
    require(gram.rows() == n && gram.cols() == n,
            "train_binary_svm: gram size does not match label count");
    require(gram.is_symmetric(1e-9), "train_binary_svm: gram must be symmetric");
    require(c_reg > 0.0, "train_binary_svm: C must be > 0");
    require(tol > 0.0, "train_binary_svm: tol must be > 0");
    bool has_pos = false, has_neg = false;
    for (int label : y) {
        require(label == 1 || label == -1, "train_binary_svm: labels must be +1 or -1");
        (label == 1 ? has_pos : has_neg) = true;
    }
    require(has_pos && has_neg, "train_binary_svm: both classes must be present");

    // Dual: minimize 1/2 a'Qa - e'a with Q_ts = y_t y_s K_ts, subject to
    // 0 <= a <= C and y'a = 0. grad_t = (Qa)_t - 1; the optimality measure
    // is m - M over the maximal violating pair, where v_t = -y_t grad_t.
    std::vector<double> alpha(n, 0.0), grad(n, -1.0);
    const double inf = std::numeric_limits<double>::infinity();
    double m = 0.0, big_m = 0.0;

    for (std::uint64_t iter = 0;; ++iter) {
        int i = -1, j = -1;
        m = -inf;
        big_m = inf;
        for (std::size_t t = 0; t < n; ++t) {
            const bool up = y[t] == 1 ? alpha[t] < c_reg : alpha[t] > 0.0;
            const bool low = y[t] == 1 ? alpha[t] > 0.0 : alpha[t] < c_reg;
            const double v = -y[t] * grad[t];
            if (up && v > m) {
                m = v;
                i = static_cast<int>(t);
            }
            if (low && v < big_m) {
                big_m = v;
                j = static_cast<int>(t);
            }
        }
        if (i < 0 || j < 0 || m - big_m <= tol) break;
        if (iter >= max_updates)
            throw NumericError("svm solver exceeded its update budget without converging");

        double curve = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
        if (curve <= 0.0) curve = 1e-12;
        const double v_j = -y[j] * grad[j];
        const double step_unclipped = (m - v_j) / curve;
        const double room_i = y[i] == 1 ? c_reg - alpha[i] : alpha[i];
        const double room_j = y[j] == 1 ? alpha[j] : c_reg - alpha[j];
        const double step = std::min(step_unclipped, std::min(room_i, room_j));

        // Clipped coordinates land exactly on their bound so the box
        // invariant holds without rounding dust.
        if (step == room_i)
            alpha[i] = y[i] == 1 ? c_reg : 0.0;
        else
            alpha[i] += y[i] * step;
        if (step == room_j)
            alpha[j] = y[j] == 1 ? 0.0 : c_reg;
        else
            alpha[j] -= y[j] * step;

        for (std::size_t s = 0; s < n; ++s)
            grad[s] += y[s] * step * (gram(s, i) - gram(s, j));
    }

    // Free support vectors pin the bias exactly; otherwise any value in
    // the final [M, m] interval is optimal and the midpoint is used.
    double bias_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0 && alpha[t] < c_reg) {
            bias_sum += -y[t] * grad[t];
            ++free_count;
        }
    }
    BinarySVM svm;
    if (free_count > 0)
        svm.bias = bias_sum / static_cast<double>(free_count);
    else if (std::isfinite(m) && std::isfinite(big_m))
        svm.bias = (m + big_m) / 2.0;
    else
        svm.bias = std::isfinite(m) ? m : (std::isfinite(big_m) ? big_m : 0.0);

    svm.c_reg = c_reg;
    svm.alpha = std::move(alpha);
    svm.y = y;
    svm.sample_indices.resize(n);
    for (std::size_t t = 0; t < n; ++t) svm.sample_indices[t] = t;
    return svm;
}

OvOClassifier train_ovo(const Matrix& gram, const std::vector<int>& labels, double c_reg,
                        double tol) {
    const std::size_t n = labels.size();
    require(n > 0, "train_ovo: no training samples");
    require(gram.rows() == n && gram.cols() == n,
            "train_ovo: gram size does not match label count");

    OvOClassifier clf;
    clf.train_count = n;
    std::set<int> distinct(labels.begin(), labels.end());
    clf.classes.assign(distinct.begin(), distinct.end());
    require(clf.classes.size() >= 2, "train_ovo: need at least 2 classes");

    struct Pair {
        int neg, pos;
    };
    std::vector<Pair> pairs;
    for (std::size_t a = 0; a < clf.classes.size(); ++a)
        for (std::size_t b = a + 1; b < clf.classes.size(); ++b)
            pairs.push_back({clf.classes[a], clf.classes[b]});

    clf.machines.resize(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t p) {
        const Pair pair = pairs[p];
        std::vector<std::size_t> subset;
        std::vector<int> y;
        for (std::size_t t = 0; t < n; ++t) {
            if (labels[t] == pair.neg || labels[t] == pair.pos) {
                subset.push_back(t);
                y.push_back(labels[t] == pair.pos ? 1 : -1);
            }
        }
        Matrix sub(subset.size(), subset.size());
        for (std::size_t a = 0; a < subset.size(); ++a)
            for (std::size_t b = 0; b < subset.size(); ++b)
                sub(a, b) = gram(subset[a], subset[b]);

        BinarySVM machine = train_binary_svm(sub, y, c_reg, tol);
        machine.neg_class = pair.neg;
        machine.pos_class = pair.pos;
        for (std::size_t t = 0; t < subset.size(); ++t)
            machine.sample_indices[t] = subset[t];
        clf.machines[p] = std::move(machine);
    });
    return clf;
}

std::vector<int> predict_ovo(const OvOClassifier& clf, const Matrix& test_gram) {
    require(!clf.machines.empty(), "predict_ovo: classifier has no machines");
    require(test_gram.cols() == clf.train_count,
            "predict_ovo: gram columns do not match the training samples");

    std::vector<int> out(test_gram.rows());
    parallel_for(test_gram.rows(), [&](std::size_t row) {
        std::vector<int> votes(clf.classes.size(), 0);
        std::vector<double> strength(clf.classes.size(), 0.0);
        for (const BinarySVM& machine : clf.machines) {
            const double f = machine.decision(test_gram, row);
            const int winner = f > 0.0 ? machine.pos_class : machine.neg_class;
            const std::size_t w =
                std::lower_bound(clf.classes.begin(), clf.classes.end(), winner) -
                clf.classes.begin();
            ++votes[w];
            strength[w] += std::fabs(f);
        }
        std::size_t best = 0;
        for (std::size_t c = 1; c < clf.classes.size(); ++c) {
            if (votes[c] > votes[best] ||
                (votes[c] == votes[best] && strength[c] > strength[best]))
                best = c;
        }
        out[row] = clf.classes[best];
    });
    return out;
}

std::vector<double> default_c_grid() { return {0.1, 1.0, 10.0, 100.0}; }

std::vector<double> default_gamma_multipliers() { return {0.25, 0.5, 1.0, 2.0, 4.0}; }

TuneResult tune_hyperparameters(const std::vector<std::vector<FeatureVector>>& channels,
                                const std::vector<int>& labels, KernelKind kind,
                                const std::vector<double>& c_grid,
                                const std::vector<double>& gamma_grid, int k, double tol,
                                std::uint64_t seed) {
    require(!channels.empty(), "tune_hyperparameters: no channels");
    if (kind != KernelKind::fusion)
        require(channels.size() == 1,
                "tune_hyperparameters: only the fusion kernel takes multiple channels");
    const std::size_t n = labels.size();
    for (const auto& rows : channels)
        require(rows.size() == n,
                "tune_hyperparameters: channel size does not match label count");
    require(!c_grid.empty(), "tune_hyperparameters: empty C grid");
    for (double c : c_grid) require(c > 0.0, "tune_hyperparameters: C must be > 0");
    if (kind == KernelKind::rbf) {
        require(!gamma_grid.empty(), "tune_hyperparameters: rbf needs a gamma grid");
        for (double g : gamma_grid)
            require(g > 0.0, "tune_hyperparameters: gamma must be > 0");
    } else {
        require(gamma_grid.empty(),
                "tune_hyperparameters: gamma grid only applies to the rbf kernel");
    }

    const std::vector<double> gammas =
        kind == KernelKind::rbf ? gamma_grid : std::vector<double>{0.0};
    const std::vector<int> folds = stratified_fold_assignments(labels, k, seed);

    TuneResult result;
    for (double c : c_grid)
        for (double g : gammas) result.table.push_back({c, g, 0.0});

    for (int fold = 0; fold < k; ++fold) {
        std::vector<std::size_t> train_idx, val_idx;
        for (std::size_t t = 0; t < n; ++t)
            (folds[t] == fold ? val_idx : train_idx).push_back(t);

        std::vector<int> train_labels, val_labels;
        for (std::size_t t : train_idx) train_labels.push_back(labels[t]);
        for (std::size_t t : val_idx) val_labels.push_back(labels[t]);

        std::vector<std::vector<FeatureVector>> train_rows(channels.size());
        std::vector<std::vector<FeatureVector>> val_rows(channels.size());
        for (std::size_t ch = 0; ch < channels.size(); ++ch) {
            for (std::size_t t : train_idx) train_rows[ch].push_back(channels[ch][t]);
            for (std::size_t t : val_idx) val_rows[ch].push_back(channels[ch][t]);
        }

        // The Gram only depends on gamma (rbf) or on nothing tunable, so
        // it is built once per bandwidth and shared across the C values.
        for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
            Matrix train_gram, val_gram;
            if (kind == KernelKind::fusion || kind == KernelKind::chi2) {
                std::vector<Channel> train_ch, val_ch;
                for (std::size_t ch = 0; ch < channels.size(); ++ch) {
                    const double dbar = mean_chi2(train_rows[ch]);
                    train_ch.push_back({train_rows[ch], train_rows[ch], dbar});
                    val_ch.push_back({val_rows[ch], train_rows[ch], dbar});
                }
                train_gram = fusion_gram(train_ch).entries;
                val_gram = fusion_gram(val_ch).entries;
            } else {
                KernelDescriptor desc;
                desc.kind = kind;
                desc.gamma = gammas[gi];
                train_gram = gram(desc, train_rows[0], train_rows[0]).entries;
                val_gram = gram(desc, val_rows[0], train_rows[0]).entries;
            }
            for (std::size_t ci = 0; ci < c_grid.size(); ++ci) {
                const OvOClassifier clf =
                    train_ovo(train_gram, train_labels, c_grid[ci], tol);
                const std::vector<int> pred = predict_ovo(clf, val_gram);
                std::size_t hits = 0;
                for (std::size_t t = 0; t < pred.size(); ++t)
                    if (pred[t] == val_labels[t]) ++hits;
                result.table[ci * gammas.size() + gi].accuracy +=
                    static_cast<double>(hits) / static_cast<double>(pred.size());
            }
        }
    }

    std::size_t best = 0;
    for (TuneEntry& entry : result.table) entry.accuracy /= static_cast<double>(k);
    for (std::size_t p = 1; p < result.table.size(); ++p) {
        const TuneEntry& cand = result.table[p];
        const TuneEntry& cur = result.table[best];
        if (cand.accuracy > cur.accuracy ||
            (cand.accuracy == cur.accuracy && cand.c_reg < cur.c_reg))
            best = p;
    }
    result.c_reg = result.table[best].c_reg;
    result.gamma = result.table[best].gamma;
    result.accuracy = result.table[best].accuracy;
    return result;
}

GramMatrix model_test_gram(const SvmModel& model,
                           const std::vector<std::vector<FeatureVector>>& test_channels) {
    require(test_channels.size() == model.channel_rows.size(),
            "model_test_gram: channel count does not match the model");
    const KernelDescriptor& desc = model.classifier.descriptor;
    if (desc.kind == KernelKind::fusion) {
        std::vector<Channel> channels;
        for (std::size_t ch = 0; ch < test_channels.size(); ++ch)
            channels.push_back({test_channels[ch], model.channel_rows[ch],
                                model.channel_mean_distances[ch]});
        return fusion_gram(channels);
    }
    return gram(desc, test_channels[0], model.channel_rows[0]);
}

void save_svm_model(const SvmModel& model, const std::string& path) {
    nlohmann::json doc;
    doc["schema_version"] = serde::kSchemaVersion;
    doc["kind"] = "svm_model";
    doc["kernel"] = to_string(model.classifier.descriptor.kind);
    doc["gamma"] = model.classifier.descriptor.gamma;
    doc["classes"] = model.classifier.classes;
    doc["train_count"] = model.classifier.train_count;
    doc["label_names"] = model.label_names;

    nlohmann::json channels = nlohmann::json::array();
    for (std::size_t ch = 0; ch < model.channel_rows.size(); ++ch) {
        nlohmann::json entry;
        entry["mean_distance"] = model.channel_mean_distances[ch];
        entry["rows"] = model.channel_rows[ch];
        channels.push_back(std::move(entry));
    }
    doc["channels"] = std::move(channels);

    nlohmann::json machines = nlohmann::json::array();
    for (const BinarySVM& svm : model.classifier.machines) {
        nlohmann::json entry;
        entry["neg"] = svm.neg_class;
        entry["pos"] = svm.pos_class;
        entry["c_reg"] = svm.c_reg;
        entry["bias"] = svm.bias;
        std::vector<std::size_t> support;
        std::vector<double> alpha;
        std::vector<int> y;
        for (std::size_t t = 0; t < svm.alpha.size(); ++t) {
            if (svm.alpha[t] == 0.0) continue;
            support.push_back(svm.sample_indices[t]);
            alpha.push_back(svm.alpha[t]);
            y.push_back(svm.y[t]);
        }
        entry["support"] = std::move(support);
        entry["alpha"] = std::move(alpha);
        entry["y"] = std::move(y);
        machines.push_back(std::move(entry));
    }
    doc["machines"] = std::move(machines);
    serde::write_json_file(path, doc);
}

SvmModel load_svm_model(const std::string& path) {
    const nlohmann::json doc = serde::read_json_file(path);
    serde::check_envelope(doc, "svm_model");

    SvmModel model;
    model.classifier.descriptor.kind =
        kernel_kind_from_string(serde::get_as<std::string>(doc, "kernel"));
    model.classifier.descriptor.gamma = serde::get_as<double>(doc, "gamma");
    model.classifier.classes = serde::get_as<std::vector<int>>(doc, "classes");
    model.classifier.train_count = serde::get_as<std::size_t>(doc, "train_count");
    model.label_names = serde::get_as<std::vector<std::string>>(doc, "label_names");
    require(std::is_sorted(model.classifier.classes.begin(), model.classifier.classes.end()),
            "svm model: classes must be sorted");
    require(model.classifier.classes.size() >= 2, "svm model: needs at least 2 classes");

    const nlohmann::json& channels = serde::field(doc, "channels");
    require(channels.is_array() && !channels.empty(), "svm model: channels must be a list");
    for (const nlohmann::json& entry : channels) {
        model.channel_mean_distances.push_back(serde::get_as<double>(entry, "mean_distance"));
        auto rows = serde::get_as<std::vector<FeatureVector>>(entry, "rows");
        require(rows.size() == model.classifier.train_count,
                "svm model: channel row count does not match train_count");
        model.channel_rows.push_back(std::move(rows));
    }
    if (model.classifier.descriptor.kind != KernelKind::fusion)
        require(model.channel_rows.size() == 1,
                "svm model: non-fusion kernels take exactly one channel");
    if (model.classifier.descriptor.kind == KernelKind::chi2)
        model.classifier.descriptor.mean_distance = model.channel_mean_distances[0];

    const std::size_t num_classes = model.classifier.classes.size();
    const nlohmann::json& machines = serde::field(doc, "machines");
    require(machines.is_array() &&
                machines.size() == num_classes * (num_classes - 1) / 2,
            "svm model: expected one machine per class pair");
    for (const nlohmann::json& entry : machines) {
        BinarySVM svm;
        svm.neg_class = serde::get_as<int>(entry, "neg");
        svm.pos_class = serde::get_as<int>(entry, "pos");
        svm.c_reg = serde::get_as<double>(entry, "c_reg");
        svm.bias = serde::get_as<double>(entry, "bias");
        svm.sample_indices = serde::get_as<std::vector<std::size_t>>(entry, "support");
        svm.alpha = serde::get_as<std::vector<double>>(entry, "alpha");
        svm.y = serde::get_as<std::vector<int>>(entry, "y");
        require(svm.neg_class < svm.pos_class, "svm model: machine classes must be ordered");
        require(svm.alpha.size() == svm.sample_indices.size() &&
                    svm.y.size() == svm.sample_indices.size(),
                "svm model: machine arrays must align");
        for (std::size_t t = 0; t < svm.alpha.size(); ++t) {
            require(svm.sample_indices[t] < model.classifier.train_count,
                    "svm model: support index out of range");
            require(svm.alpha[t] > 0.0 && svm.alpha[t] <= svm.c_reg,
                    "svm model: alpha out of [0, C]");
            require(svm.y[t] == 1 || svm.y[t] == -1, "svm model: y must be +1 or -1");
        }
        model.classifier.machines.push_back(std::move(svm));
    }
    return model;
}

} // namespace lte
