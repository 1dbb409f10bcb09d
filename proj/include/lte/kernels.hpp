#pragma once

#include <string>
#include <vector>

#include "lte/dataset.hpp"
#include "lte/linalg.hpp"

namespace lte {

enum class KernelKind { linear, chi2, hist, rbf, fusion };

KernelKind kernel_kind_from_string(const std::string& name);
std::string to_string(KernelKind kind);

/// Kernel identity plus its data-dependent parameters: chi2 carries the
/// mean training-set distance, rbf its bandwidth. Unused fields stay 0.
struct KernelDescriptor {
    KernelKind kind = KernelKind::linear;
    double mean_distance = 0.0; // chi2: normalizer from the training rows
    double gamma = 0.0;         // rbf bandwidth
};

struct GramMatrix {
    Matrix entries;
    KernelDescriptor descriptor;
    std::vector<std::string> row_ids; // optional, attached by callers
    std::vector<std::string> col_ids;
};

/// Half-convention chi-square distance: 0.5 * sum (u-v)^2/(u+v), with
/// 0/0 terms contributing 0. Inputs must be nonnegative.
double chi2_distance(const FeatureVector& u, const FeatureVector& v);

/// Mean chi2 distance over all unordered distinct row pairs. Errors on
/// fewer than 2 rows and on an all-identical set (zero mean).
double mean_chi2(const std::vector<FeatureVector>& rows);

/// Bandwidth heuristic 1/(dim * mean per-feature variance); falls back to
/// 1/dim when the rows have no variance.
double default_rbf_gamma(const std::vector<FeatureVector>& rows);

/// Kernel values for descriptor.kind over rows x cols. chi2 needs
/// descriptor.mean_distance (from the training rows), rbf needs
/// descriptor.gamma; the fusion kind must go through fusion_gram.
GramMatrix gram(const KernelDescriptor& descriptor, const std::vector<FeatureVector>& rows,
                const std::vector<FeatureVector>& cols);

/// One embedding channel of the fused kernel: row/col vectors plus the
/// channel's training-set mean chi2 distance.
struct Channel {
    std::vector<FeatureVector> rows;
    std::vector<FeatureVector> cols;
    double mean_distance = 0.0;
};

/// exp(-sum_k D_k(i,j)/mean_k). With a single channel this reproduces the
/// chi2 gram exactly (same floating-point path).
GramMatrix fusion_gram(const std::vector<Channel>& channels);

/// CSV export: header "id,<col ids>", one row per Gram row. Missing ids
/// fall back to positional r1../c1.. names.
void save_gram(const GramMatrix& gram, const std::string& path);

} // namespace lte
