#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lte/dataset.hpp"
#include "lte/kernels.hpp"
#include "lte/linalg.hpp"

namespace lte {

/// Soft-margin kernel SVM in dual form. alpha, y, and sample_indices are
/// aligned; sample_indices maps subproblem positions to rows of the full
/// training Gram. Invariants: 0 <= alpha_t <= c_reg and
/// sum_t alpha_t y_t = 0 within 1e-6.
struct BinarySVM {
    int neg_class = 0; // voted when the decision value is <= 0
    int pos_class = 0; // voted when the decision value is > 0
    double c_reg = 0.0;
    double bias = 0.0;
    std::vector<std::size_t> sample_indices;
    std::vector<double> alpha;
    std::vector<int> y; // -1 or +1

    /// sum_t alpha_t y_t K(x_t, x) + bias, reading K(x_t, x) from the
    /// given test-by-train Gram row.
    double decision(const Matrix& test_gram, std::size_t row) const;

    /// Positions with alpha > 0, as full-training-set indices.
    std::vector<std::size_t> support() const;
};

/// Solves the dual with sequential minimal optimization on the maximal
/// violating pair, stopping when the KKT violation falls below tol.
/// Throws NumericError when max_updates pair steps are not enough.
BinarySVM train_binary_svm(const Matrix& gram, const std::vector<int>& y, double c_reg,
                           double tol, std::uint64_t max_updates = 1000000);

struct OvOClassifier {
    std::vector<int> classes; // sorted distinct class ids
    std::size_t train_count = 0;
    KernelDescriptor descriptor;
    std::vector<BinarySVM> machines; // one per class pair (a, b), a < b
};

/// One machine per unordered class pair, each trained on the Gram
/// submatrix of that pair's samples. The smaller class id is the negative
/// side of its machine.
OvOClassifier train_ovo(const Matrix& gram, const std::vector<int>& labels, double c_reg,
                        double tol);

/// Majority vote over pairwise machines. Ties go to the class with the
/// larger summed |decision| among its winning machines, then to the
/// smaller class id.
std::vector<int> predict_ovo(const OvOClassifier& clf, const Matrix& test_gram);

struct TuneEntry {
    double c_reg = 0.0;
    double gamma = 0.0; // 0 when the kernel has no bandwidth
    double accuracy = 0.0;
};

struct TuneResult {
    double c_reg = 0.0;
    double gamma = 0.0;
    double accuracy = 0.0;
    std::vector<TuneEntry> table; // grid order: c_grid outer, gamma_grid inner
};

/// Grid search by stratified k-fold cross-validated accuracy over the
/// per-channel embedded training vectors (one channel unless kind is
/// fusion). gamma_grid holds concrete bandwidths and must be empty except
/// for rbf. chi2/fusion normalizers are recomputed per fold from that
/// fold's training rows. Best = highest mean accuracy, ties to the
/// smallest c_reg, then first grid order.
TuneResult tune_hyperparameters(const std::vector<std::vector<FeatureVector>>& channels,
                                const std::vector<int>& labels, KernelKind kind,
                                const std::vector<double>& c_grid,
                                const std::vector<double>& gamma_grid, int k, double tol,
                                std::uint64_t seed);

/// Default search grids.
std::vector<double> default_c_grid();
std::vector<double> default_gamma_multipliers();

/// Self-contained trained model: the classifier plus everything needed to
/// kernelize new samples against its training set (per-channel training
/// rows and chi2 normalizers). Non-fusion kernels use exactly one channel.
struct SvmModel {
    OvOClassifier classifier;
    std::vector<std::vector<FeatureVector>> channel_rows;
    std::vector<double> channel_mean_distances; // chi2/fusion normalizers, else 0
    std::vector<std::string> label_names;       // names for class ids 1..C
};

/// Test-by-train Gram for the model's kernel. test_channels must align
/// with the model's channels in count and dimension.
GramMatrix model_test_gram(const SvmModel& model,
                           const std::vector<std::vector<FeatureVector>>& test_channels);

void save_svm_model(const SvmModel& model, const std::string& path);
SvmModel load_svm_model(const std::string& path);

} // namespace lte
