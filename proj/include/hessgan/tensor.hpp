#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hessgan {

/// Flat vector of all trainable weights of one player.
using ParamVector = std::vector<double>;

/// Dense row-major matrix. One row per sample when used as a batch.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    void fill(double v);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// A batch of samples (rows = batch size).
using Batch = Matrix;

/// Vertically stack two matrices with equal column count.
Matrix vstack(const Matrix& top, const Matrix& bottom);

/// Gather the given rows of `m` into a new matrix.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

bool all_finite(std::span<const double> x);

}  // namespace hessgan
