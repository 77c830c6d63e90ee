#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hessgan/errors.hpp"
#include "hessgan/oracles.hpp"
#include "hessgan/rng.hpp"
#include "hessgan/spectral.hpp"

using namespace hessgan;

namespace {

Matrix diagonal(std::span<const double> d) {
    Matrix a(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) a(i, i) = d[i];
    return a;
}

std::vector<double> range(double lo, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + static_cast<double>(i);
    return v;
}

HvpOracle identity_oracle() {
    return [](std::span<const double> v, std::span<double> out) { std::copy(v.begin(), v.end(), out.begin()); };
}

double w1_distance(const std::vector<double>& grid, const std::vector<double>& p, const std::vector<double>& q) {
    double fp = 0.0, fq = 0.0, w = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double h = grid[i] - grid[i - 1];
        fp += 0.5 * h * (p[i] + p[i - 1]);
        fq += 0.5 * h * (q[i] + q[i - 1]);
        w += h * std::abs(fp - fq);
    }
    return w;
}

}  // namespace

TEST_CASE("lanczos on diag(1..10) with m = 10 recovers the spectrum") {
    const auto d = range(1.0, 10);
    const auto res = lanczos(dense_oracle(diagonal(d)), 10, 10, rademacher_probe(10, 1));
    const auto ev = eig_tridiagonal(res.tridiagonal).values;
    REQUIRE(ev.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(ev[i] - d[i]) <= 1e-8);
}

TEST_CASE("lanczos on the identity with m = 1") {
    const std::vector<double> start{3.0, 0.0, 4.0};
    const auto res = lanczos(identity_oracle(), 3, 1, start);
    REQUIRE(res.tridiagonal.size() == 1);
    CHECK(res.tridiagonal.diag[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(res.basis.vectors[0][0] == doctest::Approx(0.6));
    CHECK(res.basis.vectors[0][2] == doctest::Approx(0.8));
}

TEST_CASE("lanczos argument checks") {
    const std::vector<double> zero(4, 0.0), start(4, 1.0);
    CHECK_THROWS_AS(lanczos(identity_oracle(), 4, 2, zero), ArgumentError);
    CHECK_THROWS_AS(lanczos(identity_oracle(), 4, 0, start), ArgumentError);
    CHECK_THROWS_AS(lanczos(identity_oracle(), 4, 5, start), ArgumentError);
    CHECK_THROWS_AS(lanczos(identity_oracle(), 4, 2, std::vector<double>(3, 1.0)), ArgumentError);
}

TEST_CASE("lanczos breakdown on an invariant subspace") {
    // start vector in the span of two eigenvectors: Krylov space has dimension 2
    const auto d = range(1.0, 6);
    std::vector<double> start(6, 0.0);
    start[1] = 1.0;
    start[4] = 1.0;
    const auto res = lanczos(dense_oracle(diagonal(d)), 6, 6, start);
    CHECK(res.breakdown);
    CHECK(res.tridiagonal.size() == 2);
    LanczosOptions opts;
    opts.restart_on_breakdown = true;
    opts.restart_seed = 3;
    const auto full = lanczos(dense_oracle(diagonal(d)), 6, 6, start, opts);
    const auto ev = eig_tridiagonal(full.tridiagonal).values;
    REQUIRE(ev.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(ev[i] - d[i]) <= 1e-10);
}

TEST_CASE("random symmetric 100x100 with m = 100 matches the dense solver") {
    const Matrix a = oracle::random_symmetric(100, 77);
    const auto exact = oracle::dense_eigenvalues(a);
    const auto res = lanczos(dense_oracle(a), 100, 100, rademacher_probe(100, 5));
    const auto ev = eig_tridiagonal(res.tridiagonal).values;
    REQUIRE(ev.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(std::abs(ev[i] - exact[i]) <= 1e-6 * std::max(1.0, std::abs(exact[i])));
    }
}

TEST_CASE("basis orthonormality up to m = 200") {
    const Matrix a = oracle::random_symmetric(200, 8);
    const auto res = lanczos(dense_oracle(a), 200, 200, rademacher_probe(200, 9));
    const auto& q = res.basis.vectors;
    double worst_off = 0.0, worst_norm = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double d = 0.0;
            for (std::size_t r = 0; r < 200; ++r) d += q[i][r] * q[j][r];
            if (i == j) {
                worst_norm = std::max(worst_norm, std::abs(d - 1.0));
            } else {
                worst_off = std::max(worst_off, std::abs(d));
            }
        }
    }
    CHECK(worst_off <= 1e-8);
    CHECK(worst_norm <= 1e-10);
    for (double b : res.tridiagonal.offdiag) CHECK(b >= 0.0);
}

TEST_CASE("negating the start vector leaves Ritz values unchanged") {
    const Matrix a = oracle::random_symmetric(40, 12);
    auto start = rademacher_probe(40, 13);
    const auto r1 = eig_tridiagonal(lanczos(dense_oracle(a), 40, 15, start).tridiagonal).values;
    for (double& x : start) x = -x;
    const auto r2 = eig_tridiagonal(lanczos(dense_oracle(a), 40, 15, start).tridiagonal).values;
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == doctest::Approx(r2[i]).epsilon(1e-12));
}

TEST_CASE("eig_tridiagonal examples") {
    SUBCASE("already diagonal") {
        const TridiagonalMatrix t{{3.0, -1.0, 2.0}, {0.0, 0.0}};
        const auto e = eig_tridiagonal(t);
        CHECK(e.values == std::vector<double>{-1.0, 2.0, 3.0});
        // permutation matrix: column 0 is e_1
        CHECK(std::abs(e.vectors(1, 0)) == 1.0);
        CHECK(std::abs(e.vectors(2, 1)) == 1.0);
        CHECK(std::abs(e.vectors(0, 2)) == 1.0);
    }
    SUBCASE("2x2 [[2,1],[1,2]]") {
        const auto e = eig_tridiagonal(TridiagonalMatrix{{2.0, 2.0}, {1.0}});
        CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(e.values[1] == doctest::Approx(3.0).epsilon(1e-15));
    }
    SUBCASE("random 50x50 tridiagonal vs dense solver") {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> normal;
        TridiagonalMatrix t;
        Matrix dense(50, 50);
        for (std::size_t i = 0; i < 50; ++i) {
            t.diag.push_back(normal(rng));
            dense(i, i) = t.diag.back();
        }
        for (std::size_t i = 0; i + 1 < 50; ++i) {
            t.offdiag.push_back(std::abs(normal(rng)));
            dense(i, i + 1) = dense(i + 1, i) = t.offdiag.back();
        }
        const auto e = eig_tridiagonal(t);
        const auto exact = oracle::dense_eigenvalues(dense);
        for (std::size_t i = 0; i < 50; ++i) CHECK(std::abs(e.values[i] - exact[i]) <= 1e-10);
        // eigenvectors orthonormal and satisfy T u = λ u
        for (std::size_t j = 0; j < 50; ++j) {
            for (std::size_t i = 0; i < 50; ++i) {
                double tu = dense(i, i) * e.vectors(i, j);
                if (i > 0) tu += dense(i, i - 1) * e.vectors(i - 1, j);
                if (i + 1 < 50) tu += dense(i, i + 1) * e.vectors(i + 1, j);
                CHECK(std::abs(tu - e.values[j] * e.vectors(i, j)) <= 1e-10);
            }
        }
    }
}

TEST_CASE("gaussian_kernel values") {
    CHECK(gaussian_kernel(0.0, 0.0, 1.0) == doctest::Approx(0.3989422804).epsilon(1e-10));
    CHECK(gaussian_kernel(1.0, 3.0, 2.0) == doctest::Approx(gaussian_kernel(1.0, 1.0, 2.0) * std::exp(-0.5)));
    CHECK(gaussian_kernel(0.0, 2.0, 1.0) == doctest::Approx(0.05399096651).epsilon(1e-10));
    CHECK_THROWS_AS(gaussian_kernel(0.0, 0.0, 0.0), ArgumentError);
}

TEST_CASE("slq on the identity is a single Gaussian at 1") {
    SlqOptions opts;
    opts.steps = 5;
    opts.probes = 3;
    opts.sigma = SigmaRule::absolute(0.01);
    opts.seed = 2;
    const auto d = slq_density(identity_oracle(), 50, opts);
    CHECK(std::abs(integrate(d) - 1.0) <= 0.02);
    const auto peak = std::max_element(d.density.begin(), d.density.end()) - d.density.begin();
    CHECK(d.grid[static_cast<std::size_t>(peak)] == doctest::Approx(1.0).epsilon(1e-3));
    for (const auto& nodes : d.nodes) {
        for (double l : nodes) CHECK(l == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("slq on diag(1..100): moments, integral and weights") {
    for (const auto& r : oracle::slq_suite(99)) {
        INFO(r.name << ": " << r.worst << " " << r.detail);
        CHECK(r.passed);
    }
    // variance form of the second moment
    const auto dvals = range(1.0, 100);
    SlqOptions opts;
    opts.seed = 7;
    const auto d = slq_density(dense_oracle(diagonal(dvals)), 100, opts);
    const double mean = moment(d, 1);
    const double var = moment(d, 2) - mean * mean;
    double exact_var = 0.0;
    for (double x : dvals) exact_var += (x - 50.5) * (x - 50.5);
    exact_var /= 100.0;
    CHECK(std::abs(var - exact_var) / exact_var <= 0.05);
    CHECK(d.lanczos_steps == 80);
    CHECK(d.num_probes == 10);
    CHECK(d.grid.size() == 1024);
}

TEST_CASE("slq is deterministic per seed and errors propagate") {
    const Matrix a = oracle::random_symmetric(30, 1);
    SlqOptions opts;
    opts.steps = 10;
    opts.probes = 2;
    opts.seed = 11;
    const auto d1 = slq_density(dense_oracle(a), 30, opts);
    const auto d2 = slq_density(dense_oracle(a), 30, opts);
    CHECK(d1.density == d2.density);
    const HvpOracle bad = [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), std::nan(""));
    };
    CHECK_THROWS_AS(slq_density(bad, 30, opts), NumericalError);
}

TEST_CASE("W1 to the broadened exact spectrum shrinks as probes grow") {
    std::vector<double> lam(60);
    for (std::size_t i = 0; i < 60; ++i) lam[i] = std::pow(static_cast<double>(i) / 59.0, 2.0) * 10.0 - 2.0;
    const Matrix a = oracle::with_spectrum(lam, 31);
    const double sigma = 0.3;
    std::vector<double> avg;
    for (std::size_t k : {1, 4, 16}) {
        double total = 0.0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            SlqOptions opts;
            opts.steps = 12;
            opts.probes = k;
            opts.sigma = SigmaRule::absolute(sigma);
            opts.seed = derive_seed(500 + k, s);
            const auto d = slq_density(dense_oracle(a), 60, opts);
            std::vector<double> exact(d.grid.size(), 0.0);
            for (std::size_t g = 0; g < d.grid.size(); ++g) {
                for (double l : lam) exact[g] += gaussian_kernel(l, d.grid[g], sigma) / 60.0;
            }
            total += w1_distance(d.grid, d.density, exact);
        }
        avg.push_back(total / 20.0);
    }
    INFO("W1 averages " << avg[0] << " " << avg[1] << " " << avg[2]);
    CHECK(avg[0] > avg[1]);
    CHECK(avg[1] > avg[2]);
}

TEST_CASE("topk examples") {
    const auto d = range(1.0, 10);
    SUBCASE("diag(1..10), k = 2 largest") {
        TopkOptions opts;
        opts.k = 2;
        opts.steps = 10;
        opts.seed = 3;
        const auto pairs = topk_eigenpairs(dense_oracle(diagonal(d)), 10, opts);
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0].value == doctest::Approx(10.0).epsilon(1e-12));
        CHECK(pairs[1].value == doctest::Approx(9.0).epsilon(1e-12));
        CHECK(std::abs(std::abs(pairs[0].vector[9]) - 1.0) <= 1e-8);
        CHECK(std::abs(std::abs(pairs[1].vector[8]) - 1.0) <= 1e-8);
        for (const auto& p : pairs) {
            CHECK(p.residual <= 1e-8);
            CHECK(p.converged);
        }
    }
    SUBCASE("known spectrum {-5, 0, ..., 3}, smallest") {
        std::vector<double> lam{-5.0};
        for (int i = 0; i <= 3; ++i) lam.push_back(i);
        for (int i = 0; i < 15; ++i) lam.push_back(0.2 * i);
        TopkOptions opts;
        opts.mode = EigenMode::smallest_algebraic;
        opts.steps = static_cast<std::size_t>(lam.size());
        const auto pairs = topk_eigenpairs(dense_oracle(oracle::with_spectrum(lam, 4)), lam.size(), opts);
        CHECK(pairs[0].value == doctest::Approx(-5.0).epsilon(1e-8));
    }
    SUBCASE("largest magnitude picks -5 over 3") {
        const std::vector<double> lam{-5.0, 0.0, 1.0, 3.0};
        TopkOptions opts;
        opts.mode = EigenMode::largest_magnitude;
        opts.steps = 4;
        const auto pairs = topk_eigenpairs(dense_oracle(oracle::with_spectrum(lam, 2)), 4, opts);
        CHECK(pairs[0].value == doctest::Approx(-5.0).epsilon(1e-10));
    }
    SUBCASE("k = N = m gives the full spectrum") {
        const Matrix a = oracle::random_symmetric(12, 6);
        const auto exact = oracle::dense_eigenvalues(a);
        TopkOptions opts;
        opts.k = 12;
        opts.steps = 12;
        opts.mode = EigenMode::smallest_algebraic;
        const auto pairs = topk_eigenpairs(dense_oracle(a), 12, opts);
        REQUIRE(pairs.size() == 12);
        for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(pairs[i].value - exact[i]) <= 1e-6);
        for (const auto& p : pairs) {
            double n = 0.0;
            for (double x : p.vector) n += x * x;
            CHECK(std::abs(std::sqrt(n) - 1.0) <= 1e-10);
        }
    }
    SUBCASE("identity Hessian still yields k orthonormal pairs") {
        TopkOptions opts;
        opts.k = 2;
        opts.steps = 5;
        const auto pairs = topk_eigenpairs(identity_oracle(), 8, opts);
        REQUIRE(pairs.size() == 2);
        double d01 = 0.0;
        for (std::size_t i = 0; i < 8; ++i) d01 += pairs[0].vector[i] * pairs[1].vector[i];
        CHECK(std::abs(d01) <= 1e-10);
    }
    SUBCASE("k larger than m is rejected") {
        TopkOptions opts;
        opts.k = 5;
        opts.steps = 3;
        CHECK_THROWS_AS(topk_eigenpairs(dense_oracle(diagonal(d)), 10, opts), ArgumentError);
    }
    SUBCASE("unconverged pairs are flagged") {
        TopkOptions opts;
        opts.steps = 3;
        opts.tol = 1e-12;
        const Matrix a = oracle::random_symmetric(50, 3);
        const auto pairs = topk_eigenpairs(dense_oracle(a), 50, opts);
        CHECK_FALSE(pairs[0].converged);
        CHECK(pairs[0].residual > 1e-12);
    }
}

TEST_CASE("Lanczos suite across 20 matrices") {
    for (const auto& r : oracle::lanczos_suite(20, 321)) {
        INFO(r.name << ": " << r.worst << " " << r.detail);
        CHECK(r.passed);
    }
}

TEST_CASE("eigen mode names round-trip") {
    for (auto m : {EigenMode::largest_algebraic, EigenMode::smallest_algebraic, EigenMode::largest_magnitude}) {
        CHECK(parse_eigen_mode(eigen_mode_name(m)) == m);
    }
    CHECK_THROWS_AS(parse_eigen_mode("biggest"), ConfigError);
}
