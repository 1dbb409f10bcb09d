#pragma once

#include <cstddef>
#include <vector>

namespace lte {

/// Dense row-major matrix of doubles. Sized for this project's needs
/// (affinity matrices over label sets, Gram matrices over sample sets).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool is_symmetric(double tol = 0.0) const;
    double row_sum(std::size_t i) const;

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// Eigenvalues (descending) and matching eigenvectors (columns) of a
/// symmetric matrix.
struct EigenDecomposition {
    std::vector<double> values;
    Matrix vectors;
};

/// Cyclic Jacobi eigendecomposition for small symmetric matrices.
/// Converges when the off-diagonal Frobenius norm falls below
/// tol * ||A||_F. Throws NumericError if it fails to converge.
EigenDecomposition jacobi_eigen(const Matrix& a, double tol = 1e-10, int max_sweeps = 100);

} // namespace lte
