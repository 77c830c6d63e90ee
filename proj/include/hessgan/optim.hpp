#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hessgan/objective.hpp"
#include "hessgan/spectral.hpp"
#include "hessgan/tensor.hpp"

namespace hessgan {

enum class Player { generator, discriminator };

std::string_view player_name(Player p);
Player parse_player(std::string_view text);

struct AdamHyper {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    ParamVector m;
    ParamVector v;
    std::uint64_t t = 0;
    AdamHyper hyper;

    static AdamState create(std::size_t n, const AdamHyper& hyper = {});
    void validate() const;
};

/// Bias-corrected Adam update, in place. A non-finite gradient throws
/// NumericalError and leaves both `state` and `params` untouched.
void adam_step(AdamState& state, ParamVector& params, std::span<const double> grad);

/// g* = g − Σ ⟨g, v_i⟩ v_i. The v_i must be orthonormal within 1e-6.
ParamVector nudge_gradient(std::span<const double> grad, const std::vector<ParamVector>& eigvecs);

struct NudgeConfig {
    enum class Target { generator, discriminator, both };

    std::size_t k = 1;
    std::size_t recompute_stride = 1;
    std::size_t lanczos_steps = 40;
    EigenMode eigen_mode = EigenMode::largest_algebraic;
    Target apply_to = Target::both;
    double tol = 1e-3;

    bool applies_to(Player p) const;
    void validate() const;
};

NudgeConfig::Target parse_nudge_target(std::string_view text);
std::string_view nudge_target_name(NudgeConfig::Target t);

/// Eigenpairs reused between refreshes.
struct NudgeCache {
    std::vector<EigenPair> pairs;
    std::uint64_t refreshed_at = 0;
    bool valid = false;
};

struct StepInfo {
    double loss = 0.0;
    double grad_norm = 0.0;
    double nudged_norm = 0.0;
    double max_projection = 0.0;  // max_i |⟨g*, v_i⟩|
    bool nudged = false;
    bool refreshed = false;
    bool unconverged = false;
    std::vector<double> eigenvalues;
    std::vector<double> residuals;
};

/// One optimizer step on `objective`. With `nudge` set, the gradient is
/// projected off the cached top-k Hessian eigenvectors (refreshed whenever
/// state.t is a multiple of the stride) before the Adam update; without it, or
/// with k = 0, this is exactly adam_step.
StepInfo nudged_adam_step(const Objective& objective, ParamVector& params, AdamState& state,
                          NudgeCache& cache, const NudgeConfig* nudge, std::uint64_t probe_seed);

}  // namespace hessgan
