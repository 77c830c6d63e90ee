#include "hessgan/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "hessgan/errors.hpp"
#include "hessgan/kernels.hpp"

namespace hessgan {

ProjectionPlane plane_from_topk(const Objective& objective, std::span<const double> origin,
                                const PlaneOptions& options) {
    if (origin.size() < 2) throw ArgumentError("plane_from_topk: need at least two parameters");
    TopkOptions opts;
    opts.k = 2;
    opts.steps = std::max<std::size_t>(options.lanczos_steps, 2);
    opts.mode = EigenMode::largest_algebraic;
    opts.tol = options.tol;
    opts.seed = options.seed;
    auto pairs = topk_eigenpairs(objective.hessian_at(origin), origin.size(), opts);

    ProjectionPlane plane;
    plane.origin.assign(origin.begin(), origin.end());
    plane.u = pairs[0].vector;
    plane.v = pairs[1].vector;
    plane.lambda_u = pairs[0].value;
    plane.lambda_v = pairs[1].value;
    plane.residual_u = pairs[0].residual;
    plane.residual_v = pairs[1].residual;

    // One Gram-Schmidt pass.
    kernels::scale(1.0 / kernels::norm2(plane.u), plane.u);
    kernels::axpy(-kernels::dot(plane.v, plane.u), plane.u, plane.v);
    kernels::scale(1.0 / kernels::norm2(plane.v), plane.v);

    const double gap = std::abs(plane.lambda_u - plane.lambda_v);
    plane.degenerate = gap <= std::max(plane.residual_u + plane.residual_v,
                                       1e-10 * std::max(1.0, std::abs(plane.lambda_u)));
    return plane;
}

std::vector<std::pair<double, double>> project_trajectory(const std::vector<ParamVector>& checkpoints,
                                                          const ProjectionPlane& plane) {
    std::vector<std::pair<double, double>> out;
    out.reserve(checkpoints.size());
    ParamVector diff(plane.origin.size());
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const auto& w = checkpoints[i];
        if (w.size() != plane.origin.size()) {
            throw ArgumentError("project_trajectory: checkpoint " + std::to_string(i) + " has length " +
                                std::to_string(w.size()) + ", plane has " + std::to_string(plane.origin.size()));
        }
        for (std::size_t j = 0; j < w.size(); ++j) diff[j] = w[j] - plane.origin[j];
        out.emplace_back(kernels::dot(diff, plane.u), kernels::dot(diff, plane.v));
    }
    return out;
}

LandscapeGrid loss_grid(const Objective& objective, const ProjectionPlane& plane, double half_width,
                        std::size_t resolution, bool log_scale, double upper_bound) {
    if (resolution < 2) throw ArgumentError("loss_grid: resolution must be >= 2");
    if (!(half_width > 0.0)) throw ArgumentError("loss_grid: half width must be positive");
    const std::size_t n = plane.origin.size();
    if (plane.u.size() != n || plane.v.size() != n || objective.dim() != n) {
        throw ArgumentError("loss_grid: plane and objective dimensions differ");
    }

    LandscapeGrid grid;
    grid.log_scaled = log_scale;
    // Integer numerator keeps the middle coordinate exactly 0 for odd resolutions.
    const double denom = static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double c = half_width * (2.0 * static_cast<double>(i) - denom) / denom;
        grid.alphas.push_back(c);
        grid.betas.push_back(c);
    }
    grid.raw_loss = Matrix(resolution, resolution);
    ParamVector w(n);
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                w[k] = plane.origin[k] + grid.alphas[i] * plane.u[k] + grid.betas[j] * plane.v[k];
            }
            double value;
            try {
                value = objective.value(w);
            } catch (const NumericalError&) {
                value = std::numeric_limits<double>::quiet_NaN();
            }
            grid.evaluations += 1;
            if (!std::isfinite(value)) {
                value = upper_bound;
                grid.clamped_points += 1;
            }
            grid.raw_loss(i, j) = value;
        }
    }
    grid.loss = grid.raw_loss;
    if (log_scale) {
        const double lo = *std::min_element(grid.raw_loss.data().begin(), grid.raw_loss.data().end());
        for (auto& x : grid.loss.data()) x = std::log(x - lo + 1e-9);
    }
    return grid;
}

void write_landscape_csv(const LandscapeGrid& grid, std::ostream& out) {
    out << "alpha,beta,loss\n";
    for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
        for (std::size_t j = 0; j < grid.betas.size(); ++j) {
            out << fmt::format("{},{},{}\n", grid.alphas[i], grid.betas[j], grid.loss(i, j));
        }
    }
}

void write_trajectory_csv(const std::vector<std::pair<double, double>>& points, std::ostream& out) {
    out << "index,alpha,beta\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        out << fmt::format("{},{},{}\n", i, points[i].first, points[i].second);
    }
}

}  // namespace hessgan
