#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drowsy {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }

    /// Builds a matrix from equally sized rows. Throws DimensionMismatch on ragged input.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;

struct SymmetricEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // column j is the eigenvector of values[j]
    int sweeps = 0;
};

/// Cyclic Jacobi rotations on a symmetric matrix until the off-diagonal
/// Frobenius norm drops below tol * max(1, ||A||_F).
SymmetricEigen jacobi_eigen(Matrix a, double tol = 1e-10, int max_sweeps = 100);

}  // namespace drowsy
