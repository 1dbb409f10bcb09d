#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lte/dataset.hpp"
#include "lte/forest.hpp"
#include "lte/kernels.hpp"
#include "lte/metrics.hpp"
#include "lte/svm.hpp"

namespace lte {

/// One embedding channel. Scene channels learn a label tree from the
/// channel's training data; aux channels select closeness-ranked
/// categories from aux_data and embed through a tree over those.
struct ChannelConfig {
    std::string name;
    bool is_aux = false;
    std::string train_path;
    std::string test_path;
    std::string aux_data_path; // aux channels only
    int top_n = 5;             // aux channels only
};

/// Full pipeline configuration. seed, jobs, and out_dir come from the
/// command line; everything else from the config file, with defaults for
/// all keys except paths.
struct ExperimentConfig {
    std::vector<ChannelConfig> channels;
    ForestConfig forest;                // forest.seed is ignored; stage seeds are derived
    int embedding_folds = 10;
    KernelKind kernel = KernelKind::fusion;
    std::vector<double> c_grid = default_c_grid();
    std::vector<double> gamma_multipliers = default_gamma_multipliers();
    int svm_folds = 10;
    double svm_tol = 1e-3;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out_dir;
};

/// Parses the sectioned key = value config format. Unknown sections and
/// keys are rejected. Does not fill seed, jobs, or out_dir beyond what the
/// optional [run] section provides.
ExperimentConfig load_experiment_config(const std::string& path);

/// Runs the full pipeline: per channel, build the label tree, embed
/// training snippets out of fold and test snippets through the final
/// model (aux channels go through closeness selection and an aux tree
/// instead); then tune, train the one-vs-one SVM, predict, and score.
/// Every intermediate artifact is written under config.out_dir. Errors
/// are rethrown with the failing stage named.
MetricsReport run_experiment(const ExperimentConfig& config);

} // namespace lte
