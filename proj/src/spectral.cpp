#include "hessgan/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "hessgan/errors.hpp"
#include "hessgan/kernels.hpp"
#include "hessgan/rng.hpp"

namespace hessgan {

ParamVector rademacher_probe(std::size_t dim, std::uint64_t seed) {
    ParamVector v(dim);
    std::mt19937_64 rng(seed);
    const double s = 1.0 / std::sqrt(static_cast<double>(dim));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < dim; ++i) {
        if (i % 64 == 0) bits = rng();
        v[i] = (bits >> (i % 64)) & 1U ? s : -s;
    }
    return v;
}

namespace {

void orthogonalize(std::span<double> w, const std::vector<ParamVector>& basis) {
    // Twice is enough (Kahan/Parlett).
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) kernels::axpy(-kernels::dot(w, q), q, w);
    }
}

}  // namespace

LanczosResult lanczos(const HvpOracle& oracle, std::size_t dim, std::size_t steps,
                      std::span<const double> start, const LanczosOptions& options) {
    if (start.size() != dim) {
        throw ArgumentError("lanczos: start vector has length " + std::to_string(start.size()) +
                            ", operator dimension is " + std::to_string(dim));
    }
    if (steps == 0 || steps > dim) {
        throw ArgumentError("lanczos: need 1 <= steps <= dim (steps=" + std::to_string(steps) +
                            ", dim=" + std::to_string(dim) + ")");
    }
    const double start_norm = kernels::norm2(start);
    if (!(start_norm > 0.0)) throw ArgumentError("lanczos: start vector is zero");

    LanczosResult result;
    auto& basis = result.basis.vectors;
    auto& t = result.tridiagonal;
    basis.reserve(steps);

    ParamVector q(start.begin(), start.end());
    kernels::scale(1.0 / start_norm, q);
    ParamVector w(dim);
    double scale = 0.0;
    double beta_prev = 0.0;

    for (std::size_t j = 0; j < steps; ++j) {
        basis.push_back(q);
        std::fill(w.begin(), w.end(), 0.0);
        oracle(basis[j], w);
        if (!all_finite(w)) {
            throw NumericalError("lanczos: operator returned a non-finite vector at step " +
                                 std::to_string(j));
        }
        const double alpha = kernels::dot(w, basis[j]);
        kernels::axpy(-alpha, basis[j], w);
        if (j > 0) kernels::axpy(-beta_prev, basis[j - 1], w);
        orthogonalize(w, basis);
        t.diag.push_back(alpha);
        if (j + 1 == steps) break;

        const double beta = kernels::norm2(w);
        scale = std::max({scale, std::abs(alpha), beta});
        if (beta < 1e-12 * std::max(1.0, scale)) {
            if (!options.restart_on_breakdown) {
                result.breakdown = true;
                break;
            }
            ParamVector r = rademacher_probe(dim, derive_seed(options.restart_seed, j));
            orthogonalize(r, basis);
            const double rn = kernels::norm2(r);
            if (!(rn > 1e-8)) {
                result.breakdown = true;
                break;
            }
            kernels::scale(1.0 / rn, r);
            t.offdiag.push_back(0.0);
            beta_prev = 0.0;
            q = std::move(r);
            continue;
        }
        t.offdiag.push_back(beta);
        beta_prev = beta;
        q = w;
        kernels::scale(1.0 / beta, q);
    }
    return result;
}

TridiagonalEigen eig_tridiagonal(const TridiagonalMatrix& t) {
    const std::size_t n = t.diag.size();
    if (n == 0) throw ArgumentError("eig_tridiagonal: empty matrix");
    if (t.offdiag.size() + 1 != n) {
        throw ArgumentError("eig_tridiagonal: off-diagonal must have length " + std::to_string(n - 1));
    }
    std::vector<double> d = t.diag;
    std::vector<double> e(n, 0.0);
    std::copy(t.offdiag.begin(), t.offdiag.end(), e.begin());
    Matrix z(n, n);
    for (std::size_t i = 0; i < n; ++i) z(i, i) = 1.0;

    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) + dd == dd) break;
            }
            if (m == l) break;
            if (++iter > 200) throw NumericalError("eig_tridiagonal: QL iteration did not converge");

            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0;
            double c = 1.0;
            double p = 0.0;
            bool deflated = false;
            for (std::size_t i = m; i-- > l;) {
                double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for (std::size_t k = 0; k < n; ++k) {
                    f = z(k, i + 1);
                    z(k, i + 1) = s * z(k, i) + c * f;
                    z(k, i) = c * z(k, i) - s * f;
                }
            }
            if (deflated) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (m != l);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    TridiagonalEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = d[order[j]];
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = z(i, order[j]);
    }
    return out;
}

double gaussian_kernel(double lambda, double t, double sigma) {
    if (!(sigma > 0.0)) throw ArgumentError("gaussian_kernel: sigma must be positive");
    const double u = (t - lambda) / sigma;
    return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

SpectralDensity slq_density(const HvpOracle& oracle, std::size_t dim, const SlqOptions& options) {
    if (options.probes == 0 || options.steps == 0) {
        throw ArgumentError("slq_density: need at least one probe and one Lanczos step");
    }
    if (options.grid_points < 2) throw ArgumentError("slq_density: need at least two grid points");
    if (dim == 0) throw ArgumentError("slq_density: zero-dimensional operator");

    SpectralDensity out;
    out.num_probes = options.probes;
    out.lanczos_steps = std::min(options.steps, dim);
    out.seed = options.seed;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < options.probes; ++p) {
        ParamVector probe = rademacher_probe(dim, derive_seed(options.seed, p));
        LanczosResult lr;
        try {
            lr = lanczos(oracle, dim, out.lanczos_steps, probe);
        } catch (const NumericalError& e) {
            throw NumericalError("slq probe " + std::to_string(p) + ": " + e.what());
        } catch (const ArgumentError& e) {
            throw ArgumentError("slq probe " + std::to_string(p) + ": " + e.what());
        }
        TridiagonalEigen eig = eig_tridiagonal(lr.tridiagonal);
        std::vector<double> w(eig.values.size());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = eig.vectors(0, j) * eig.vectors(0, j);
        lo = std::min(lo, eig.values.front());
        hi = std::max(hi, eig.values.back());
        out.nodes.push_back(std::move(eig.values));
        out.weights.push_back(std::move(w));
    }

    if (options.sigma.kind == SigmaRule::Kind::absolute) {
        if (!(options.sigma.value > 0.0)) throw ArgumentError("slq_density: sigma must be positive");
        out.sigma = options.sigma.value;
    } else {
        out.sigma = std::max(options.sigma.value * (hi - lo), options.sigma.floor);
    }
    if (!(out.sigma > 0.0)) throw ArgumentError("slq_density: sigma rule produced a non-positive width");

    const double g0 = lo - 3.0 * out.sigma;
    const double g1 = hi + 3.0 * out.sigma;
    const std::size_t n = options.grid_points;
    out.grid.resize(n);
    out.density.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        out.grid[i] = g0 + (g1 - g0) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    // Probes are summed in index order so the result is independent of how they were scheduled.
    const double inv_k = 1.0 / static_cast<double>(options.probes);
    for (std::size_t p = 0; p < options.probes; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < out.nodes[p].size(); ++j) {
                s += out.weights[p][j] * gaussian_kernel(out.nodes[p][j], out.grid[i], out.sigma);
            }
            out.density[i] += inv_k * s;
        }
    }
    return out;
}

double moment(const SpectralDensity& density, int power) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < density.grid.size(); ++i) {
        const double h = density.grid[i + 1] - density.grid[i];
        const double f0 = std::pow(density.grid[i], power) * density.density[i];
        const double f1 = std::pow(density.grid[i + 1], power) * density.density[i + 1];
        s += 0.5 * h * (f0 + f1);
    }
    return s;
}

double integrate(const SpectralDensity& density) { return moment(density, 0); }

EigenMode parse_eigen_mode(std::string_view text) {
    if (text == "largest_algebraic" || text == "largest") return EigenMode::largest_algebraic;
    if (text == "smallest_algebraic" || text == "smallest") return EigenMode::smallest_algebraic;
    if (text == "largest_magnitude" || text == "magnitude") return EigenMode::largest_magnitude;
    throw ConfigError("unknown eigen mode '" + std::string(text) + "'");
}

std::string_view eigen_mode_name(EigenMode mode) {
    switch (mode) {
        case EigenMode::largest_algebraic:
            return "largest_algebraic";
        case EigenMode::smallest_algebraic:
            return "smallest_algebraic";
        case EigenMode::largest_magnitude:
            return "largest_magnitude";
    }
    return "?";
}

std::vector<EigenPair> topk_eigenpairs(const HvpOracle& oracle, std::size_t dim,
                                       const TopkOptions& options) {
    const std::size_t m = std::min(options.steps, dim);
    if (options.k > m) {
        throw ArgumentError("topk_eigenpairs: k=" + std::to_string(options.k) +
                            " exceeds the Lanczos step count " + std::to_string(m));
    }
    if (options.k == 0) return {};

    ParamVector start = rademacher_probe(dim, options.seed);
    LanczosOptions lopts;
    lopts.restart_on_breakdown = true;
    lopts.restart_seed = derive_seed(options.seed, 0x5EED);
    LanczosResult lr = lanczos(oracle, dim, m, start, lopts);
    TridiagonalEigen eig = eig_tridiagonal(lr.tridiagonal);
    const std::size_t size = eig.values.size();
    if (size < options.k) {
        throw NumericalError("topk_eigenpairs: Krylov space exhausted after " + std::to_string(size) +
                             " steps, fewer than k=" + std::to_string(options.k));
    }

    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), 0);
    switch (options.mode) {
        case EigenMode::largest_algebraic:
            std::reverse(order.begin(), order.end());
            break;
        case EigenMode::smallest_algebraic:
            break;
        case EigenMode::largest_magnitude:
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return std::abs(eig.values[a]) > std::abs(eig.values[b]);
            });
            break;
    }

    std::vector<EigenPair> pairs;
    pairs.reserve(options.k);
    ParamVector hy(dim);
    for (std::size_t idx = 0; idx < options.k; ++idx) {
        const std::size_t j = order[idx];
        EigenPair pair;
        pair.value = eig.values[j];
        pair.vector.assign(dim, 0.0);
        for (std::size_t i = 0; i < size; ++i) kernels::axpy(eig.vectors(i, j), lr.basis.vectors[i], pair.vector);
        kernels::scale(1.0 / kernels::norm2(pair.vector), pair.vector);

        std::fill(hy.begin(), hy.end(), 0.0);
        oracle(pair.vector, hy);
        if (!all_finite(hy)) throw NumericalError("topk_eigenpairs: non-finite residual product");
        kernels::axpy(-pair.value, pair.vector, hy);
        pair.residual = kernels::norm2(hy);
        pair.converged = pair.residual <= options.tol;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace hessgan
