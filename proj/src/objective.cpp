#include "hessgan/objective.hpp"

#include <memory>

#include "hessgan/errors.hpp"
#include "hessgan/kernels.hpp"

namespace hessgan {

HvpOracle Objective::hessian_at(std::span<const double> w) const {
    auto point = std::make_shared<const std::vector<double>>(w.begin(), w.end());
    return [this, point](std::span<const double> v, std::span<double> out) { hvp(*point, v, out); };
}

QuadraticObjective::QuadraticObjective(Matrix a, std::vector<double> b)
    : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() != a_.cols() || a_.rows() == 0) {
        throw ArgumentError("quadratic objective needs a nonempty square matrix");
    }
    if (b_.empty()) b_.assign(a_.rows(), 0.0);
    if (b_.size() != a_.rows()) throw ArgumentError("quadratic objective: linear term has wrong length");
}

QuadraticObjective QuadraticObjective::diagonal(std::span<const double> diag) {
    Matrix a(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) a(i, i) = diag[i];
    return QuadraticObjective(std::move(a));
}

double QuadraticObjective::value(std::span<const double> w) const {
    if (w.size() != dim()) throw ArgumentError("quadratic objective: wrong parameter length");
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) s += w[i] * (0.5 * kernels::dot(a_.row(i), w) + b_[i]);
    return s;
}

double QuadraticObjective::value_and_grad(std::span<const double> w, std::span<double> grad) const {
    if (w.size() != dim() || grad.size() != dim()) {
        throw ArgumentError("quadratic objective: wrong parameter length");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
        const double aw = kernels::dot(a_.row(i), w);
        grad[i] = aw + b_[i];
        s += w[i] * (0.5 * aw + b_[i]);
    }
    return s;
}

void QuadraticObjective::hvp(std::span<const double> /*w*/, std::span<const double> v,
                             std::span<double> out) const {
    if (v.size() != dim() || out.size() != dim()) {
        throw ArgumentError("quadratic objective: wrong vector length");
    }
    for (std::size_t i = 0; i < dim(); ++i) out[i] = kernels::dot(a_.row(i), v);
}

HvpOracle dense_oracle(Matrix a) {
    auto m = std::make_shared<const Matrix>(std::move(a));
    return [m](std::span<const double> v, std::span<double> out) {
        for (std::size_t i = 0; i < m->rows(); ++i) out[i] = kernels::dot(m->row(i), v);
    };
}

}  // namespace hessgan
