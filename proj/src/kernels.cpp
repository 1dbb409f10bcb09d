#include "lte/kernels.hpp"

#include <cmath>
#include <fstream>

#include "io_util.hpp"
#include "lte/error.hpp"
#include "lte/parallel.hpp"

namespace lte {

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "linear") return KernelKind::linear;
    if (name == "chi2") return KernelKind::chi2;
    if (name == "hist") return KernelKind::hist;
    if (name == "rbf") return KernelKind::rbf;
    if (name == "fusion") return KernelKind::fusion;
    throw ValidationError("unknown kernel kind: " + name);
}

std::string to_string(KernelKind kind) {
    switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::chi2: return "chi2";
    case KernelKind::hist: return "hist";
    case KernelKind::rbf: return "rbf";
    case KernelKind::fusion: return "fusion";
    }
    throw ValidationError("unknown kernel kind value");
}

double chi2_distance(const FeatureVector& u, const FeatureVector& v) {
    require(u.size() == v.size(), "chi2_distance: length mismatch");
    double total = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) {
        require(u[d] >= 0.0 && v[d] >= 0.0, "chi2_distance: negative entry");
        const double sum = u[d] + v[d];
        if (sum == 0.0) continue;
        const double diff = u[d] - v[d];
        total += diff * diff / sum;
    }
    return 0.5 * total;
}

double mean_chi2(const std::vector<FeatureVector>& rows) {
    require(rows.size() >= 2, "mean_chi2: need at least 2 rows");
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            total += chi2_distance(rows[i], rows[j]);
            ++pairs;
        }
    }
    const double mean = total / static_cast<double>(pairs);
    require(mean > 0.0, "mean_chi2: zero mean distance, all rows identical");
    return mean;
}

double default_rbf_gamma(const std::vector<FeatureVector>& rows) {
    require(!rows.empty(), "default_rbf_gamma: no rows");
    const std::size_t dim = rows.front().size();
    require(dim > 0, "default_rbf_gamma: rows have no features");
    double variance_sum = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        double mean = 0.0;
        for (const FeatureVector& row : rows) {
            require(row.size() == dim, "default_rbf_gamma: ragged rows");
            mean += row[d];
        }
        mean /= static_cast<double>(rows.size());
        double var = 0.0;
        for (const FeatureVector& row : rows) {
            const double dev = row[d] - mean;
            var += dev * dev;
        }
        variance_sum += var / static_cast<double>(rows.size());
    }
    const double mean_variance = variance_sum / static_cast<double>(dim);
    if (mean_variance <= 0.0) return 1.0 / static_cast<double>(dim);
    return 1.0 / (static_cast<double>(dim) * mean_variance);
}

namespace {

void check_rows(const std::vector<FeatureVector>& rows, const char* what,
                bool nonnegative) {
    require(!rows.empty(), std::string(what) + ": empty vector set");
    const std::size_t dim = rows.front().size();
    require(dim > 0, std::string(what) + ": rows have no features");
    for (const FeatureVector& row : rows) {
        require(row.size() == dim, std::string(what) + ": ragged rows");
        if (nonnegative)
            for (double v : row)
                require(v >= 0.0, std::string(what) + ": negative entry");
    }
}

double linear_entry(const FeatureVector& u, const FeatureVector& v) {
    double total = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) total += u[d] * v[d];
    return total;
}

double hist_entry(const FeatureVector& u, const FeatureVector& v) {
    double total = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) total += std::min(u[d], v[d]);
    return total;
}

double rbf_entry(const FeatureVector& u, const FeatureVector& v, double gamma) {
    double sq = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) {
        const double diff = u[d] - v[d];
        sq += diff * diff;
    }
    return std::exp(-gamma * sq);
}

// Shared by the chi2 kind and fusion_gram so a single channel reproduces
// the chi2 gram bit for bit.
double fused_entry(const std::vector<Channel>& channels, std::size_t i, std::size_t j) {
    double total = 0.0;
    for (const Channel& channel : channels)
        total += chi2_distance(channel.rows[i], channel.cols[j]) / channel.mean_distance;
    return std::exp(-total);
}

Matrix fused_entries(const std::vector<Channel>& channels) {
    const std::size_t n = channels.front().rows.size();
    const std::size_t m = channels.front().cols.size();
    Matrix entries(n, m);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < m; ++j) entries(i, j) = fused_entry(channels, i, j);
    });
    return entries;
}

} // namespace

GramMatrix gram(const KernelDescriptor& descriptor, const std::vector<FeatureVector>& rows,
                const std::vector<FeatureVector>& cols) {
    const bool nonnegative =
        descriptor.kind == KernelKind::chi2 || descriptor.kind == KernelKind::hist;
    check_rows(rows, "gram", nonnegative);
    check_rows(cols, "gram", nonnegative);
    require(rows.front().size() == cols.front().size(),
            "gram: row and column dimensions differ");

    GramMatrix out;
    out.descriptor = descriptor;
    const std::size_t n = rows.size(), m = cols.size();
    switch (descriptor.kind) {
    case KernelKind::linear:
        out.entries = Matrix(n, m);
        parallel_for(n, [&](std::size_t i) {
            for (std::size_t j = 0; j < m; ++j)
                out.entries(i, j) = linear_entry(rows[i], cols[j]);
        });
        break;
    case KernelKind::hist:
        out.entries = Matrix(n, m);
        parallel_for(n, [&](std::size_t i) {
            for (std::size_t j = 0; j < m; ++j)
                out.entries(i, j) = hist_entry(rows[i], cols[j]);
        });
        break;
    case KernelKind::rbf:
        require(descriptor.gamma > 0.0, "gram: rbf kernel requires gamma > 0");
        out.entries = Matrix(n, m);
        parallel_for(n, [&](std::size_t i) {
            for (std::size_t j = 0; j < m; ++j)
                out.entries(i, j) = rbf_entry(rows[i], cols[j], descriptor.gamma);
        });
        break;
    case KernelKind::chi2:
        require(descriptor.mean_distance > 0.0,
                "gram: chi2 kernel requires a positive mean distance");
        out.entries = fused_entries({Channel{rows, cols, descriptor.mean_distance}});
        break;
    case KernelKind::fusion:
        throw ValidationError("gram: the fusion kernel goes through fusion_gram");
    }
    return out;
}

GramMatrix fusion_gram(const std::vector<Channel>& channels) {
    require(!channels.empty(), "fusion_gram: no channels");
    for (std::size_t k = 0; k < channels.size(); ++k) {
        const std::string what = "fusion_gram channel " + std::to_string(k + 1);
        check_rows(channels[k].rows, what.c_str(), true);
        check_rows(channels[k].cols, what.c_str(), true);
        require(channels[k].rows.front().size() == channels[k].cols.front().size(),
                what + ": row and column dimensions differ");
        require(channels[k].mean_distance > 0.0, what + ": mean distance must be > 0");
        require(channels[k].rows.size() == channels.front().rows.size() &&
                    channels[k].cols.size() == channels.front().cols.size(),
                what + ": sample counts differ between channels");
    }
    GramMatrix out;
    out.descriptor.kind = KernelKind::fusion;
    out.entries = fused_entries(channels);
    return out;
}

void save_gram(const GramMatrix& gram, const std::string& path) {
    const std::size_t n = gram.entries.rows(), m = gram.entries.cols();
    require(n > 0 && m > 0, "save_gram: empty matrix");
    require(gram.row_ids.empty() || gram.row_ids.size() == n,
            "save_gram: row id count mismatch");
    require(gram.col_ids.empty() || gram.col_ids.size() == m,
            "save_gram: column id count mismatch");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open file for writing: " + path);
    out << "id";
    for (std::size_t j = 0; j < m; ++j)
        out << ','
            << (gram.col_ids.empty() ? "c" + std::to_string(j + 1) : gram.col_ids[j]);
    out << "\n";
    for (std::size_t i = 0; i < n; ++i) {
        out << (gram.row_ids.empty() ? "r" + std::to_string(i + 1) : gram.row_ids[i]);
        for (std::size_t j = 0; j < m; ++j)
            out << ',' << io::format_double(gram.entries(i, j));
        out << "\n";
    }
    out.flush();
    require(out.good(), "failed to write file: " + path);
}

} // namespace lte
