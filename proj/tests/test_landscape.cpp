#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hessgan/data.hpp"
#include "hessgan/errors.hpp"
#include "hessgan/gan.hpp"
#include "hessgan/kernels.hpp"
#include "hessgan/landscape.hpp"
#include "hessgan/objective.hpp"

using namespace hessgan;

namespace {

ParamVector axis(std::size_t n, std::size_t i) {
    ParamVector e(n, 0.0);
    e[i] = 1.0;
    return e;
}

ProjectionPlane axis_plane(std::size_t n) {
    ProjectionPlane p;
    p.origin.assign(n, 0.0);
    p.u = axis(n, 0);
    p.v = axis(n, 1);
    return p;
}

void check_orthonormal(const ProjectionPlane& p) {
    CHECK(std::abs(kernels::norm2(p.u) - 1.0) <= 1e-10);
    CHECK(std::abs(kernels::norm2(p.v) - 1.0) <= 1e-10);
    CHECK(std::abs(kernels::dot(p.u, p.v)) <= 1e-8);
}

}  // namespace

TEST_CASE("plane of diag(3,2,1) spans the first two axes") {
    const std::vector<double> diag{3, 2, 1};
    const auto q = QuadraticObjective::diagonal(diag);
    const ParamVector origin{0.3, -0.2, 0.5};
    const auto p = plane_from_topk(q, origin);
    check_orthonormal(p);
    CHECK(p.lambda_u == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(p.lambda_v == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(std::abs(std::abs(p.u[0]) - 1.0) <= 1e-8);
    CHECK(std::abs(std::abs(p.v[1]) - 1.0) <= 1e-8);
    CHECK(std::abs(p.u[2]) <= 1e-8);
    CHECK(std::abs(p.v[2]) <= 1e-8);
    CHECK_FALSE(p.degenerate);
    CHECK(p.origin == origin);
}

TEST_CASE("identity Hessian yields a flagged orthonormal pair") {
    const auto q = QuadraticObjective::diagonal(std::vector<double>(6, 1.0));
    const ParamVector origin(6, 0.1);
    const auto p = plane_from_topk(q, origin);
    check_orthonormal(p);
    CHECK(p.degenerate);
}

TEST_CASE("GAN checkpoint plane invariants") {
    GanArchitecture arch;
    arch.latent_dim = 2;
    arch.g_hidden = {4};
    arch.d_hidden = {4};
    const auto model = GanModel::create(arch, 12);
    const auto data = gaussian_ring(8, 2.0, 0.02, 64, 3);
    const auto latent = sample_latent(64, 2, 4);
    PlaneOptions opts;
    opts.lanczos_steps = 40;
    opts.seed = 6;
    for (int player = 0; player < 2; ++player) {
        const auto obj = player == 0 ? generator_objective(model, latent, GeneratorLoss::nonsaturating)
                                     : discriminator_objective(model, data.dataset.samples, latent);
        const auto& params = player == 0 ? model.theta : model.phi;
        const auto p = plane_from_topk(obj, params, opts);
        check_orthonormal(p);
        CHECK(p.lambda_u >= p.lambda_v);
        CHECK(p.residual_u <= opts.tol);
        CHECK(p.residual_v <= opts.tol);
    }
}

TEST_CASE("projection examples") {
    const std::size_t n = 5;
    auto p = axis_plane(n);
    p.origin = {1, 2, 3, 4, 5};
    p.u = {0.6, 0.8, 0, 0, 0};
    p.v = {0, 0, 0, 1, 0};

    auto pts = project_trajectory({p.origin}, p);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].first == 0.0);
    CHECK(pts[0].second == 0.0);

    ParamVector w = p.origin;
    kernels::axpy(2.0, p.u, w);
    kernels::axpy(-3.0, p.v, w);
    pts = project_trajectory({w}, p);
    CHECK(pts[0].first == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(pts[0].second == doctest::Approx(-3.0).epsilon(1e-14));

    CHECK_THROWS_AS(project_trajectory({ParamVector(3, 0.0)}, p), ArgumentError);
}

TEST_CASE("projection is orthogonal and idempotent") {
    const std::size_t n = 30;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    ProjectionPlane p;
    p.origin.resize(n);
    p.u.resize(n);
    p.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.origin[i] = g(rng);
        p.u[i] = g(rng);
        p.v[i] = g(rng);
    }
    kernels::scale(1.0 / kernels::norm2(p.u), p.u);
    kernels::axpy(-kernels::dot(p.v, p.u), p.u, p.v);
    kernels::scale(1.0 / kernels::norm2(p.v), p.v);

    std::vector<ParamVector> cps(10, ParamVector(n));
    for (auto& c : cps) {
        for (auto& x : c) x = 3.0 * g(rng);
    }
    const auto pts = project_trajectory(cps, p);
    std::vector<ParamVector> recon;
    for (std::size_t t = 0; t < cps.size(); ++t) {
        ParamVector r = p.origin;
        kernels::axpy(pts[t].first, p.u, r);
        kernels::axpy(pts[t].second, p.v, r);
        ParamVector resid = cps[t];
        kernels::axpy(-1.0, r, resid);
        CHECK(std::abs(kernels::dot(resid, p.u)) <= 1e-8);
        CHECK(std::abs(kernels::dot(resid, p.v)) <= 1e-8);
        recon.push_back(std::move(r));
    }
    const auto again = project_trajectory(recon, p);
    for (std::size_t t = 0; t < cps.size(); ++t) {
        CHECK(std::abs(again[t].first - pts[t].first) <= 1e-10);
        CHECK(std::abs(again[t].second - pts[t].second) <= 1e-10);
    }
}

TEST_CASE("grid of the unit quadratic matches its closed form") {
    const auto q = QuadraticObjective::diagonal(std::vector<double>(4, 1.0));
    const auto p = axis_plane(4);
    const auto grid = loss_grid(q, p, 1.5, 11, false);
    REQUIRE(grid.alphas.size() == 11);
    CHECK(grid.alphas[5] == 0.0);
    CHECK(grid.alphas.front() == -1.5);
    CHECK(grid.alphas.back() == 1.5);
    CHECK(grid.evaluations == 121);
    CHECK(grid.clamped_points == 0);
    for (std::size_t i = 0; i < 11; ++i) {
        for (std::size_t j = 0; j < 11; ++j) {
            const double expected = 0.5 * (grid.alphas[i] * grid.alphas[i] + grid.betas[j] * grid.betas[j]);
            CHECK(std::abs(grid.loss(i, j) - expected) <= 1e-10);
        }
    }
}

TEST_CASE("resolution 2 evaluates four points") {
    const auto q = QuadraticObjective::diagonal(std::vector<double>{1.0, 2.0});
    const auto grid = loss_grid(q, axis_plane(2), 1.0, 2, true);
    CHECK(grid.evaluations == 4);
    CHECK(grid.loss.rows() == 2);
    CHECK(grid.loss.cols() == 2);
    CHECK_THROWS_AS(loss_grid(q, axis_plane(2), 1.0, 1, false), ArgumentError);
    CHECK_THROWS_AS(loss_grid(q, axis_plane(2), 0.0, 3, false), ArgumentError);
}

TEST_CASE("positive-definite quadratic has its grid minimum at the center cell") {
    const auto q = QuadraticObjective::diagonal(std::vector<double>{5.0, 0.5, 2.0});
    const auto grid = loss_grid(q, axis_plane(3), 2.0, 21, true);
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < 21; ++i) {
        for (std::size_t j = 0; j < 21; ++j) {
            if (grid.loss(i, j) < grid.loss(bi, bj)) {
                bi = i;
                bj = j;
            }
        }
    }
    CHECK(bi == 10);
    CHECK(bj == 10);
    CHECK(grid.log_scaled);
    CHECK(grid.loss(10, 10) == doctest::Approx(std::log(1e-9)));
}

TEST_CASE("grid center equals the anchor loss") {
    GanArchitecture arch;
    arch.latent_dim = 3;
    arch.g_hidden = {6};
    arch.d_hidden = {6};
    const auto model = GanModel::create(arch, 31);
    const auto data = gaussian_ring(8, 2.0, 0.02, 32, 5);
    const auto latent = sample_latent(32, 3, 6);
    const auto obj = discriminator_objective(model, data.dataset.samples, latent);
    const auto p = plane_from_topk(obj, model.phi);
    const auto grid = loss_grid(obj, p, 0.5, 7, false);
    CHECK(std::abs(grid.raw_loss(3, 3) - obj.value(model.phi)) <= 1e-12);
    for (double x : grid.loss.data()) CHECK(std::isfinite(x));
}

TEST_CASE("non-finite grid values are clamped and counted") {
    class Blowup final : public Objective {
    public:
        std::size_t dim() const override { return 2; }
        double value(std::span<const double> w) const override {
            return w[0] > 0.5 ? std::numeric_limits<double>::infinity() : w[0] * w[0];
        }
        double value_and_grad(std::span<const double> w, std::span<double> g) const override {
            g[0] = 2 * w[0];
            g[1] = 0.0;
            return value(w);
        }
        void hvp(std::span<const double>, std::span<const double> v, std::span<double> out) const override {
            out[0] = 2 * v[0];
            out[1] = 0.0;
        }
    } obj;
    const auto grid = loss_grid(obj, axis_plane(2), 1.0, 3, false, 42.0);
    CHECK(grid.clamped_points == 3);
    CHECK(grid.loss(2, 0) == 42.0);
}

TEST_CASE("landscape and trajectory CSV") {
    const auto q = QuadraticObjective::diagonal(std::vector<double>{1.0, 1.0});
    const auto grid = loss_grid(q, axis_plane(2), 1.0, 2, false);
    std::ostringstream out;
    write_landscape_csv(grid, out);
    CHECK(out.str() == "alpha,beta,loss\n-1,-1,1\n-1,1,1\n1,-1,1\n1,1,1\n");
    std::ostringstream t;
    write_trajectory_csv({{0.5, -1.0}, {0.0, 0.0}}, t);
    CHECK(t.str() == "index,alpha,beta\n0,0.5,-1\n1,0,0\n");
}
