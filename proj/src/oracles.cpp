#include "hessgan/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "hessgan/errors.hpp"
#include "hessgan/kernels.hpp"
#include "hessgan/rng.hpp"
#include "hessgan/spectral.hpp"

namespace hessgan::oracle {

namespace {

double plain_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

ParamVector fd_gradient(const Objective& objective, std::span<const double> w, double h) {
    ParamVector x(w.begin(), w.end());
    ParamVector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = objective.value(x);
        x[i] = orig - h;
        const double fm = objective.value(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

ParamVector fd_hvp(const Objective& objective, std::span<const double> w, std::span<const double> v, double h) {
    ParamVector plus(w.begin(), w.end()), minus(w.begin(), w.end());
    for (std::size_t i = 0; i < plus.size(); ++i) {
        plus[i] += h * v[i];
        minus[i] -= h * v[i];
    }
    ParamVector gp(plus.size()), gm(plus.size());
    objective.value_and_grad(plus, gp);
    objective.value_and_grad(minus, gm);
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] = (gp[i] - gm[i]) / (2.0 * h);
    return gp;
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
    if (a.size() != b.size()) throw ArgumentError("relative_error: length mismatch");
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(diff) / std::max(plain_norm(b), floor);
}

double coordinate_error(std::span<const double> a, std::span<const double> b, double rel, double abs_floor) {
    if (a.size() != b.size()) throw ArgumentError("coordinate_error: length mismatch");
    const double floor = abs_floor / rel;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
    }
    return worst;
}

std::vector<double> dense_eigenvalues(const Matrix& m) {
    if (m.rows() != m.cols()) throw ArgumentError("dense_eigenvalues: matrix is not square");
    const auto n = static_cast<Eigen::Index>(m.rows());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = m(i, j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("dense_eigenvalues: solver failed");
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + n};
}

Matrix dense_hessian(const HvpOracle& oracle, std::size_t dim) {
    Matrix h(dim, dim);
    ParamVector e(dim, 0.0), col(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        e[j] = 1.0;
        oracle(e, col);
        e[j] = 0.0;
        for (std::size_t i = 0; i < dim; ++i) h(i, j) = col[i];
    }
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i + 1; j < dim; ++j) {
            const double s = 0.5 * (h(i, j) + h(j, i));
            h(i, j) = s;
            h(j, i) = s;
        }
    }
    return h;
}

Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double x = normal(rng);
            a(i, j) = x;
            a(j, i) = x;
        }
    }
    return a;
}

Matrix with_spectrum(std::span<const double> eigenvalues, std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(eigenvalues.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    Eigen::VectorXd lam(n);
    for (Eigen::Index i = 0; i < n; ++i) lam(i) = eigenvalues[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd a = q * lam.asDiagonal() * q.transpose();
    Matrix out(eigenvalues.size(), eigenvalues.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = 0.5 * (a(i, j) + a(j, i));
    }
    return out;
}

RandomInstance random_mlp_instance(std::uint64_t seed, std::size_t max_params) {
    std::mt19937_64 rng(seed);
    auto uniform_int = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::normal_distribution<double> normal;
    const ActivationSpec smooth[] = {{Activation::tanh}, {Activation::sigmoid}, {Activation::identity}};

    while (true) {
        const bool composite = uniform_int(0, 2) == 0;
        const bool probability_loss = uniform_int(0, 1) == 0;
        const std::size_t d_in = uniform_int(1, 4);
        const std::size_t hidden = uniform_int(1, 2);
        std::vector<std::size_t> dims{d_in};
        std::vector<ActivationSpec> acts;
        for (std::size_t l = 0; l < hidden; ++l) {
            dims.push_back(uniform_int(2, 8));
            acts.push_back(smooth[uniform_int(0, 2)]);
        }
        const std::size_t d_mid = probability_loss && !composite ? 1 : uniform_int(1, 3);
        dims.push_back(d_mid);
        acts.push_back(probability_loss && !composite ? ActivationSpec{Activation::sigmoid}
                                                      : smooth[uniform_int(0, 2)]);
        MlpNetwork head(dims, acts);

        std::vector<StackSegment> segments{{head, {}, true}};
        std::size_t d_out = d_mid;
        std::string desc = fmt::format("mlp {} params", head.param_count());
        if (composite) {
            const std::size_t tail_out = probability_loss ? 1 : uniform_int(1, 2);
            MlpNetwork tail({d_mid, uniform_int(2, 6), tail_out},
                            {smooth[uniform_int(0, 1)],
                             probability_loss ? ActivationSpec{Activation::sigmoid} : smooth[uniform_int(0, 2)]});
            segments.push_back({tail, tail.init_params(seed ^ 0x5bd1e995ULL), false});
            d_out = tail_out;
            desc += " + frozen tail";
        }
        if (head.param_count() > max_params) continue;

        const std::size_t batch = uniform_int(2, 6);
        Batch x(batch, d_in);
        for (double& v : x.data()) v = normal(rng);

        ScalarLossSpec loss;
        if (probability_loss) {
            switch (uniform_int(0, 2)) {
                case 0: {
                    std::vector<double> labels(batch);
                    for (double& y : labels) y = static_cast<double>(uniform_int(0, 1));
                    loss = ScalarLossSpec::bce(labels);
                    desc += ", bce";
                    break;
                }
                case 1:
                    loss = ScalarLossSpec::of(ScalarLossSpec::Kind::neg_log);
                    desc += ", -log p";
                    break;
                default:
                    loss = ScalarLossSpec::of(ScalarLossSpec::Kind::log_one_minus);
                    desc += ", log(1-p)";
            }
        } else if (uniform_int(0, 1) == 0) {
            std::vector<double> targets(batch * d_out);
            for (double& t : targets) t = normal(rng);
            loss = ScalarLossSpec::squared(targets);
            desc += ", squared error";
        } else {
            loss = ScalarLossSpec::of(ScalarLossSpec::Kind::linear);
            desc += ", linear";
        }
        if (uniform_int(0, 1) == 0) {
            loss.row_weights.resize(batch);
            for (double& w : loss.row_weights) w = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
            desc += ", weighted rows";
        }

        ParamVector w = head.init_params(seed);
        for (double& v : w) v += 0.1 * normal(rng);  // non-zero biases
        return {StackObjective(std::move(segments), std::move(loss), std::move(x)), std::move(w), desc};
    }
}

std::vector<SuiteResult> derivative_suite(std::size_t instances, std::uint64_t seed) {
    SuiteResult grad{"gradient vs central differences (per coordinate)", true, 0.0, 1e-5, {}};
    SuiteResult hv{"HVP vs differences of gradients", true, 0.0, 1e-4, {}};
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < instances; ++i) {
        const std::uint64_t s = derive_seed(seed, i);
        auto inst = random_mlp_instance(s);
        ParamVector g(inst.point.size());
        inst.objective.value_and_grad(inst.point, g);
        const double eg = coordinate_error(g, fd_gradient(inst.objective, inst.point), 1e-5, 1e-7);
        if (eg > grad.worst) {
            grad.worst = eg;
            grad.detail = fmt::format("instance {} ({})", i, inst.description);
        }

        std::mt19937_64 rng(s);
        ParamVector v(inst.point.size());
        for (double& x : v) x = normal(rng);
        ParamVector hv_exact(v.size());
        inst.objective.hvp(inst.point, v, hv_exact);
        const double eh = relative_error(hv_exact, fd_hvp(inst.objective, inst.point, v));
        if (eh > hv.worst) {
            hv.worst = eh;
            hv.detail = fmt::format("instance {} ({})", i, inst.description);
        }
    }
    grad.passed = grad.worst <= grad.tolerance;
    hv.passed = hv.worst <= hv.tolerance;
    return {grad, hv};
}

std::vector<SuiteResult> lanczos_suite(std::size_t matrices, std::uint64_t seed) {
    SuiteResult ritz{"Ritz values vs dense eigensolver (m = N)", true, 0.0, 1e-6, {}};
    SuiteResult ortho{"Lanczos basis orthogonality", true, 0.0, 1e-8, {}};
    for (std::size_t c = 0; c < matrices; ++c) {
        const std::uint64_t s = derive_seed(seed, c);
        const std::size_t n = 10 + static_cast<std::size_t>(s % 191);  // 10..200
        const Matrix a = random_symmetric(n, s);
        const auto exact = dense_eigenvalues(a);
        const double scale = std::max(std::abs(exact.front()), std::abs(exact.back()));
        const auto res = lanczos(dense_oracle(a), n, n, rademacher_probe(n, s + 1));
        const auto ritz_values = eig_tridiagonal(res.tridiagonal).values;
        if (ritz_values.size() != n) {
            ritz.worst = std::max(ritz.worst, 1.0);
            ritz.detail = fmt::format("matrix {} (N={}): only {} Ritz values", c, n, ritz_values.size());
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::abs(ritz_values[i] - exact[i]) / scale;
            if (e > ritz.worst) {
                ritz.worst = e;
                ritz.detail = fmt::format("matrix {} (N={}), eigenvalue {}", c, n, i);
            }
        }
        const auto& q = res.basis.vectors;
        for (std::size_t i = 0; i < q.size(); ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double d = 0.0;
                for (std::size_t r = 0; r < n; ++r) d += q[i][r] * q[j][r];
                const double e = std::abs(d - (i == j ? 1.0 : 0.0));
                if (e > ortho.worst) {
                    ortho.worst = e;
                    ortho.detail = fmt::format("matrix {} (N={}), pair ({}, {})", c, n, i, j);
                }
            }
        }
    }
    ritz.passed = ritz.worst <= ritz.tolerance;
    ortho.passed = ortho.worst <= ortho.tolerance;
    return {ritz, ortho};
}

std::vector<SuiteResult> slq_suite(std::uint64_t seed) {
    const std::size_t n = 100;
    Matrix a(n, n);
    double tr1 = 0.0, tr2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = static_cast<double>(i + 1);
        tr1 += a(i, i);
        tr2 += a(i, i) * a(i, i);
    }
    tr1 /= static_cast<double>(n);
    tr2 /= static_cast<double>(n);
    SlqOptions opts;
    opts.steps = 80;
    opts.probes = 10;
    opts.seed = seed;
    const auto d = slq_density(dense_oracle(a), n, opts);

    SuiteResult integral{"SLQ density integral on diag(1..100)", true, std::abs(integrate(d) - 1.0), 0.02, {}};
    const double m1 = moment(d, 1), m2 = moment(d, 2);
    SuiteResult moments{"SLQ first two moments vs tr(H)/N, tr(H^2)/N", true,
                        std::max(std::abs(m1 - tr1) / tr1, std::abs(m2 - tr2) / tr2), 0.05,
                        fmt::format("m1 {:.4f} (exact {:.4f}), m2 {:.2f} (exact {:.2f})", m1, tr1, m2, tr2)};
    SuiteResult weights{"SLQ per-probe weights sum to 1", true, 0.0, 1e-10, {}};
    for (const auto& w : d.weights) {
        double s = 0.0;
        for (double x : w) s += x;
        weights.worst = std::max(weights.worst, std::abs(s - 1.0));
    }
    for (auto* r : {&integral, &moments, &weights}) r->passed = r->worst <= r->tolerance;
    return {integral, moments, weights};
}

std::vector<SuiteResult> kernel_suite(std::uint64_t seed) {
    std::vector<SuiteResult> out;
    const auto& ref = kernels::scalar_table();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (auto backend : {kernels::Backend::avx2, kernels::Backend::neon}) {
        if (!kernels::backend_supported(backend)) continue;
        const auto& simd = kernels::table(backend);
        SuiteResult r{fmt::format("{} kernels vs scalar reference", kernels::backend_name(backend)), true, 0.0,
                      1e-12, {}};
        for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 64, 100, 1000, 4097}) {
            std::vector<double> x(n), y(n);
            for (double& v : x) v = normal(rng);
            for (double& v : y) v = normal(rng);
            double scale = 1.0;
            for (std::size_t i = 0; i < n; ++i) scale += std::abs(x[i] * y[i]);
            const double e_dot = std::abs(simd.dot(x.data(), y.data(), n) - ref.dot(x.data(), y.data(), n)) / scale;
            const double e_ss =
                std::abs(simd.sum_squares(x.data(), n) - ref.sum_squares(x.data(), n)) / (1.0 + ref.sum_squares(x.data(), n));
            auto y1 = y, y2 = y;
            simd.axpy(0.37, x.data(), y1.data(), n);
            ref.axpy(0.37, x.data(), y2.data(), n);
            auto s1 = x, s2 = x;
            simd.scale(-1.7, s1.data(), n);
            ref.scale(-1.7, s2.data(), n);
            double e_vec = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                e_vec = std::max({e_vec, std::abs(y1[i] - y2[i]), std::abs(s1[i] - s2[i])});
            }
            const double e = std::max({e_dot, e_ss, e_vec});
            if (e > r.worst) {
                r.worst = e;
                r.detail = fmt::format("n = {}", n);
            }
        }
        r.passed = r.worst <= r.tolerance;
        out.push_back(r);
    }
    return out;
}

}  // namespace hessgan::oracle
