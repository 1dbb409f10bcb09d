#pragma once

// Shared test helpers: seeded blob datasets, random rotations, and
// directory hashing for determinism checks.

#include "lte/dataset.hpp"
#include "lte/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

namespace testutil {

/// Gaussian blobs: class means are seeded random points in [0, spread]^dim,
/// segments are N(mean, sigma^2 I). Classes named b1..bC.
inline lte::Dataset make_blob_dataset(int num_classes, int dim, int snippets_per_class,
                                      int segments_per_snippet, double spread, double sigma,
                                      std::uint64_t seed) {
    lte::Rng rng(seed);
    std::vector<lte::FeatureVector> means(static_cast<std::size_t>(num_classes));
    for (auto& m : means) {
        m.resize(static_cast<std::size_t>(dim));
        for (double& v : m) v = spread * rng.next_double();
    }
    lte::Dataset data;
    data.num_classes = num_classes;
    data.feature_dim = dim;
    for (int c = 1; c <= num_classes; ++c)
        data.label_names.push_back("b" + std::to_string(c));
    for (int c = 1; c <= num_classes; ++c) {
        for (int s = 1; s <= snippets_per_class; ++s) {
            lte::Snippet sn;
            sn.id = "b" + std::to_string(c) + "_s" + std::to_string(s);
            sn.label = c;
            for (int g = 0; g < segments_per_snippet; ++g) {
                lte::FeatureVector x(static_cast<std::size_t>(dim));
                for (int d = 0; d < dim; ++d)
                    x[static_cast<std::size_t>(d)] =
                        means[static_cast<std::size_t>(c - 1)][static_cast<std::size_t>(d)] +
                        sigma * rng.next_normal();
                sn.segments.push_back(std::move(x));
            }
            data.snippets.push_back(std::move(sn));
        }
    }
    return data;
}

/// Random orthogonal matrix: Gram-Schmidt on a seeded Gaussian matrix.
inline std::vector<std::vector<double>> random_rotation(int dim, std::uint64_t seed) {
    lte::Rng rng(seed);
    std::vector<std::vector<double>> q(static_cast<std::size_t>(dim));
    for (auto& row : q) {
        row.resize(static_cast<std::size_t>(dim));
        for (double& v : row) v = rng.next_normal();
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double dot = 0.0;
            for (std::size_t d = 0; d < q[i].size(); ++d) dot += q[i][d] * q[j][d];
            for (std::size_t d = 0; d < q[i].size(); ++d) q[i][d] -= dot * q[j][d];
        }
        double norm = 0.0;
        for (double v : q[i]) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : q[i]) v /= norm;
    }
    return q;
}

/// Returns a copy of the dataset with every segment vector multiplied by
/// the given square matrix (rows of `rot` are the output coordinates).
inline lte::Dataset apply_rotation(const lte::Dataset& data,
                                   const std::vector<std::vector<double>>& rot) {
    lte::Dataset out = data;
    for (auto& sn : out.snippets) {
        for (auto& seg : sn.segments) {
            lte::FeatureVector y(seg.size(), 0.0);
            for (std::size_t i = 0; i < rot.size(); ++i)
                for (std::size_t j = 0; j < rot[i].size(); ++j) y[i] += rot[i][j] * seg[j];
            seg = std::move(y);
        }
    }
    return out;
}

inline std::uint64_t fnv1a(std::uint64_t h, const char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(p[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Order-independent content hash of a directory tree: FNV-1a over the
/// sorted relative paths and the byte content of every regular file.
inline std::uint64_t hash_directory(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::vector<std::pair<std::string, std::filesystem::path>> keyed;
    for (const auto& p : files)
        keyed.emplace_back(std::filesystem::relative(p, root).generic_string(), p);
    std::sort(keyed.begin(), keyed.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [rel, path] : keyed) {
        h = fnv1a(h, rel.data(), rel.size());
        h = fnv1a(h, "\0", 1);
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        const std::string bytes = buf.str();
        h = fnv1a(h, bytes.data(), bytes.size());
        h = fnv1a(h, "\0", 1);
    }
    return h;
}

/// Unique scratch directory under the system temp root, removed on scope
/// exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

} // namespace testutil
