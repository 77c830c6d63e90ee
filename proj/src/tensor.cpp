#include "hessgan/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "hessgan/errors.hpp"

namespace hessgan {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ArgumentError("matrix data size " + std::to_string(data_.size()) + " does not match " +
                            std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.cols() != bottom.cols()) {
        throw ArgumentError("vstack: column counts differ (" + std::to_string(top.cols()) + " vs " +
                            std::to_string(bottom.cols()) + ")");
    }
    std::vector<double> data(top.values());
    data.insert(data.end(), bottom.values().begin(), bottom.values().end());
    return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= m.rows()) throw ArgumentError("gather_rows: row index out of range");
        std::copy_n(m.row(rows[i]).begin(), m.cols(), out.row(i).begin());
    }
    return out;
}

bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace hessgan
