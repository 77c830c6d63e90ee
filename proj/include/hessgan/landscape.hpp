#pragma once

#include <cstddef>
#include <limits>
#include <ostream>
#include <utility>
#include <vector>

#include "hessgan/objective.hpp"
#include "hessgan/spectral.hpp"
#include "hessgan/tensor.hpp"

namespace hessgan {

/// Plane through `origin` spanned by the two leading Hessian eigenvectors.
struct ProjectionPlane {
    ParamVector origin;
    ParamVector u;
    ParamVector v;
    double lambda_u = 0.0;
    double lambda_v = 0.0;
    double residual_u = 0.0;
    double residual_v = 0.0;
    bool degenerate = false;  // λ_u and λ_v indistinguishable within their residuals
};

struct PlaneOptions {
    std::size_t lanczos_steps = 40;
    double tol = 1e-3;
    std::uint64_t seed = 0;
};

ProjectionPlane plane_from_topk(const Objective& objective, std::span<const double> origin,
                                const PlaneOptions& options = {});

/// (⟨w − origin, u⟩, ⟨w − origin, v⟩) for every checkpoint.
std::vector<std::pair<double, double>> project_trajectory(const std::vector<ParamVector>& checkpoints,
                                                          const ProjectionPlane& plane);

struct LandscapeGrid {
    std::vector<double> alphas;
    std::vector<double> betas;
    Matrix loss;      // alphas x betas; log-transformed when log_scaled
    Matrix raw_loss;  // untransformed values
    bool log_scaled = false;
    std::size_t clamped_points = 0;
    std::size_t evaluations = 0;
};

/// Evaluates the objective at origin + α_i u + β_j v, row-major. Non-finite
/// values are replaced by `upper_bound` and counted in clamped_points. With
/// log_scale the stored value is log(loss − min + 1e-9).
LandscapeGrid loss_grid(const Objective& objective, const ProjectionPlane& plane, double half_width,
                        std::size_t resolution, bool log_scale,
                        double upper_bound = std::numeric_limits<double>::max());

void write_landscape_csv(const LandscapeGrid& grid, std::ostream& out);
void write_trajectory_csv(const std::vector<std::pair<double, double>>& points, std::ostream& out);

}  // namespace hessgan
