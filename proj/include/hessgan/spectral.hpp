#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hessgan/objective.hpp"
#include "hessgan/tensor.hpp"

namespace hessgan {

struct TridiagonalMatrix {
    std::vector<double> diag;     // α, length m
    std::vector<double> offdiag;  // β, length m-1, all >= 0 when produced by Lanczos

    std::size_t size() const noexcept { return diag.size(); }
};

/// Orthonormal Krylov basis, one vector per Lanczos step.
struct LanczosBasis {
    std::vector<ParamVector> vectors;
};

struct LanczosResult {
    TridiagonalMatrix tridiagonal;
    LanczosBasis basis;
    bool breakdown = false;  // stopped early on an invariant subspace
};

struct LanczosOptions {
    /// On breakdown, continue from a fresh random direction orthogonal to the
    /// basis (T becomes block diagonal) instead of truncating.
    bool restart_on_breakdown = false;
    std::uint64_t restart_seed = 0;
};

/// Lanczos iteration with full (twice-iterated Gram-Schmidt) reorthogonalization.
LanczosResult lanczos(const HvpOracle& oracle, std::size_t dim, std::size_t steps,
                      std::span<const double> start, const LanczosOptions& options = {});

struct TridiagonalEigen {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column j is the eigenvector of values[j]
};

/// Implicit-shift QL on the symmetric tridiagonal form.
TridiagonalEigen eig_tridiagonal(const TridiagonalMatrix& t);

/// Gaussian kernel centred at `lambda`: exp(-(t-λ)²/2σ²) / (σ√(2π)).
double gaussian_kernel(double lambda, double t, double sigma);

/// How the broadening width σ is chosen for a density estimate.
struct SigmaRule {
    enum class Kind { relative, absolute };
    Kind kind = Kind::relative;
    double value = 0.01;  // relative: fraction of the observed Ritz range
    double floor = 1e-6;

    static SigmaRule relative(double fraction) { return {Kind::relative, fraction, 1e-6}; }
    static SigmaRule absolute(double sigma) { return {Kind::absolute, sigma, 0.0}; }
};

struct SpectralDensity {
    std::vector<double> grid;
    std::vector<double> density;
    double sigma = 0.0;
    std::size_t num_probes = 0;
    std::size_t lanczos_steps = 0;
    std::uint64_t seed = 0;

    /// Quadrature nodes and weights of each probe (l_i = Ritz values,
    /// ω_i = squared first components of the tridiagonal eigenvectors).
    std::vector<std::vector<double>> nodes;
    std::vector<std::vector<double>> weights;
};

struct SlqOptions {
    std::size_t steps = 80;
    std::size_t probes = 10;
    SigmaRule sigma = {};
    std::size_t grid_points = 1024;
    std::uint64_t seed = 0;
};

/// Stochastic Lanczos quadrature estimate of the eigenvalue density.
SpectralDensity slq_density(const HvpOracle& oracle, std::size_t dim, const SlqOptions& options);

/// Trapezoid integral of the density over its grid.
double integrate(const SpectralDensity& density);
/// ∫ t^p φ(t) dt over the grid.
double moment(const SpectralDensity& density, int power);

struct EigenPair {
    double value = 0.0;
    ParamVector vector;
    double residual = 0.0;  // ‖H v − λ v‖
    bool converged = false;
};

enum class EigenMode { largest_algebraic, smallest_algebraic, largest_magnitude };

EigenMode parse_eigen_mode(std::string_view text);
std::string_view eigen_mode_name(EigenMode mode);

struct TopkOptions {
    std::size_t k = 1;
    std::size_t steps = 40;
    EigenMode mode = EigenMode::largest_algebraic;
    double tol = 1e-3;
    std::uint64_t seed = 0;
};

/// k Ritz pairs sorted per mode. Each residual costs one extra oracle call;
/// pairs above `tol` are returned with converged = false.
std::vector<EigenPair> topk_eigenpairs(const HvpOracle& oracle, std::size_t dim,
                                       const TopkOptions& options);

/// Normalized Rademacher vector (entries ±1/√N).
ParamVector rademacher_probe(std::size_t dim, std::uint64_t seed);

}  // namespace hessgan
