#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "hessgan/tensor.hpp"

namespace hessgan {

/// A fixed symmetric linear map v -> H v. One oracle represents one matrix for
/// its whole lifetime (a Lanczos run relies on that).
using HvpOracle = std::function<void(std::span<const double> v, std::span<double> out)>;

/// Twice-differentiable scalar function of a flat parameter vector.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::size_t dim() const = 0;
    virtual double value(std::span<const double> w) const = 0;
    /// Writes the gradient into `grad` (length dim()) and returns the value.
    virtual double value_and_grad(std::span<const double> w, std::span<double> grad) const = 0;
    virtual void hvp(std::span<const double> w, std::span<const double> v,
                     std::span<double> out) const = 0;

    /// Hessian oracle frozen at `w`. Implementations may cache the
    /// linearization so repeated products skip the forward pass.
    virtual HvpOracle hessian_at(std::span<const double> w) const;
};

/// f(w) = ½ wᵀAw + bᵀw with dense symmetric A.
class QuadraticObjective final : public Objective {
public:
    explicit QuadraticObjective(Matrix a, std::vector<double> b = {});

    static QuadraticObjective diagonal(std::span<const double> diag);

    std::size_t dim() const override { return a_.rows(); }
    double value(std::span<const double> w) const override;
    double value_and_grad(std::span<const double> w, std::span<double> grad) const override;
    void hvp(std::span<const double> w, std::span<const double> v,
             std::span<double> out) const override;

    const Matrix& matrix() const noexcept { return a_; }

private:
    Matrix a_;
    std::vector<double> b_;
};

/// Oracle multiplying by a dense symmetric matrix (held by value).
HvpOracle dense_oracle(Matrix a);

}  // namespace hessgan
