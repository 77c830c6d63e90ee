#pragma once
// Independent reference computations used by the tests, the acceptance suite
// and `hessgan selftest`. Nothing here shares code paths with the derivative
// or eigen machinery it checks.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hessgan/mlp.hpp"
#include "hessgan/objective.hpp"
#include "hessgan/tensor.hpp"

namespace hessgan::oracle {

/// Central differences of the objective's value.
ParamVector fd_gradient(const Objective& objective, std::span<const double> w, double h = 1e-5);
/// Central differences of the objective's gradient along v.
ParamVector fd_hvp(const Objective& objective, std::span<const double> w, std::span<const double> v,
                   double h = 1e-5);

/// ‖a − b‖ / max(‖b‖, floor).
double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-8);
/// max_i |a_i − b_i| / max(|b_i|, abs_floor / rel): at most `rel` exactly when
/// every coordinate is within rel relative or abs_floor absolute.
double coordinate_error(std::span<const double> a, std::span<const double> b, double rel, double abs_floor);

/// Ascending eigenvalues of a dense symmetric matrix (Eigen's self-adjoint solver).
std::vector<double> dense_eigenvalues(const Matrix& symmetric);
/// Dense Hessian assembled column by column from HVPs, then symmetrized.
Matrix dense_hessian(const HvpOracle& oracle, std::size_t dim);
/// Symmetric matrix with i.i.d. N(0,1) entries above the diagonal.
Matrix random_symmetric(std::size_t n, std::uint64_t seed);
/// Q Λ Qᵀ with Q a random orthogonal matrix.
Matrix with_spectrum(std::span<const double> eigenvalues, std::uint64_t seed);

/// A small random MLP loss (sometimes a frozen-tail composition) at a random point.
struct RandomInstance {
    StackObjective objective;
    ParamVector point;
    std::string description;
};
RandomInstance random_mlp_instance(std::uint64_t seed, std::size_t max_params = 500);

struct SuiteResult {
    std::string name;
    bool passed = false;
    double worst = 0.0;  // worst observed error, suite-specific meaning
    double tolerance = 0.0;
    std::string detail;
};

/// Gradients vs central FD (per coordinate: rel ≤ 1e-5, abs ≤ 1e-7 near zero) and HVPs vs FD of gradients (rel ≤ 1e-4).
std::vector<SuiteResult> derivative_suite(std::size_t instances, std::uint64_t seed);
/// Ritz values at m = N vs the dense solver (rel ≤ 1e-6) and basis orthogonality (≤ 1e-8).
std::vector<SuiteResult> lanczos_suite(std::size_t matrices, std::uint64_t seed);
/// SLQ on diag(1..100): integral, first two moments and per-probe weight sums.
std::vector<SuiteResult> slq_suite(std::uint64_t seed);
/// Every compiled SIMD kernel against the scalar reference.
std::vector<SuiteResult> kernel_suite(std::uint64_t seed);

}  // namespace hessgan::oracle
