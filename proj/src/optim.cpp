#include "hessgan/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hessgan/errors.hpp"
#include "hessgan/kernels.hpp"

namespace hessgan {

std::string_view player_name(Player p) { return p == Player::generator ? "G" : "D"; }

Player parse_player(std::string_view text) {
    if (text == "G" || text == "g" || text == "generator") return Player::generator;
    if (text == "D" || text == "d" || text == "discriminator") return Player::discriminator;
    throw ConfigError("unknown player '" + std::string(text) + "' (expected G or D)");
}

AdamState AdamState::create(std::size_t n, const AdamHyper& hyper) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.hyper = hyper;
    s.validate();
    return s;
}

void AdamState::validate() const {
    if (!(hyper.lr >= 0.0)) throw ArgumentError("adam: learning rate must be non-negative");
    if (!(hyper.beta1 >= 0.0 && hyper.beta1 < 1.0) || !(hyper.beta2 >= 0.0 && hyper.beta2 < 1.0)) {
        throw ArgumentError("adam: betas must lie in [0, 1)");
    }
    if (!(hyper.eps > 0.0)) throw ArgumentError("adam: eps must be positive");
    if (m.size() != v.size()) throw ArgumentError("adam: moment vectors differ in length");
}

void adam_step(AdamState& state, ParamVector& params, std::span<const double> grad) {
    const std::size_t n = params.size();
    if (grad.size() != n || state.m.size() != n) {
        throw ArgumentError("adam_step: length mismatch (params " + std::to_string(n) + ", grad " +
                            std::to_string(grad.size()) + ", state " + std::to_string(state.m.size()) + ")");
    }
    if (!all_finite(grad)) throw NumericalError("adam_step: non-finite gradient");

    const auto& h = state.hyper;
    const double t = static_cast<double>(state.t + 1);
    const double c1 = 1.0 - std::pow(h.beta1, t);
    const double c2 = 1.0 - std::pow(h.beta2, t);
    for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * grad[i];
        state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
    state.t += 1;
}

ParamVector nudge_gradient(std::span<const double> grad, const std::vector<ParamVector>& eigvecs) {
    for (std::size_t i = 0; i < eigvecs.size(); ++i) {
        if (eigvecs[i].size() != grad.size()) {
            throw ArgumentError("nudge_gradient: eigenvector " + std::to_string(i) + " has the wrong length");
        }
        for (std::size_t j = i; j < eigvecs.size(); ++j) {
            const double d = kernels::dot(eigvecs[i], eigvecs[j]);
            const double expected = i == j ? 1.0 : 0.0;
            if (std::abs(d - expected) > 1e-6) {
                throw ArgumentError("nudge_gradient: eigenvectors " + std::to_string(i) + " and " +
                                    std::to_string(j) + " are not orthonormal (inner product " +
                                    std::to_string(d) + ")");
            }
        }
    }
    ParamVector g(grad.begin(), grad.end());
    // Modified Gram-Schmidt ordering: each coefficient is taken against the
    // already-projected vector.
    for (const auto& v : eigvecs) kernels::axpy(-kernels::dot(g, v), v, g);
    return g;
}

bool NudgeConfig::applies_to(Player p) const {
    switch (apply_to) {
        case Target::generator:
            return p == Player::generator;
        case Target::discriminator:
            return p == Player::discriminator;
        case Target::both:
            return true;
    }
    return false;
}

void NudgeConfig::validate() const {
    if (recompute_stride == 0) throw ConfigError("nudge: recompute stride must be >= 1");
    if (k > lanczos_steps) {
        throw ConfigError("nudge: k=" + std::to_string(k) + " exceeds lanczos_steps=" +
                          std::to_string(lanczos_steps));
    }
    if (!(tol > 0.0)) throw ConfigError("nudge: tolerance must be positive");
}

NudgeConfig::Target parse_nudge_target(std::string_view text) {
    if (text == "generator" || text == "G") return NudgeConfig::Target::generator;
    if (text == "discriminator" || text == "D") return NudgeConfig::Target::discriminator;
    if (text == "both") return NudgeConfig::Target::both;
    throw ConfigError("unknown nudge target '" + std::string(text) + "'");
}

std::string_view nudge_target_name(NudgeConfig::Target t) {
    switch (t) {
        case NudgeConfig::Target::generator:
            return "generator";
        case NudgeConfig::Target::discriminator:
            return "discriminator";
        case NudgeConfig::Target::both:
            return "both";
    }
    return "?";
}

StepInfo nudged_adam_step(const Objective& objective, ParamVector& params, AdamState& state,
                          NudgeCache& cache, const NudgeConfig* nudge, std::uint64_t probe_seed) {
    StepInfo info;
    ParamVector grad(params.size(), 0.0);
    info.loss = objective.value_and_grad(params, grad);
    info.grad_norm = kernels::norm2(grad);

    if (nudge == nullptr || nudge->k == 0) {
        info.nudged_norm = info.grad_norm;
        adam_step(state, params, grad);
        return info;
    }

    if (!cache.valid || state.t % nudge->recompute_stride == 0) {
        TopkOptions opts;
        opts.k = nudge->k;
        opts.steps = nudge->lanczos_steps;
        opts.mode = nudge->eigen_mode;
        opts.tol = nudge->tol;
        opts.seed = probe_seed;
        cache.pairs = topk_eigenpairs(objective.hessian_at(params), params.size(), opts);
        cache.refreshed_at = state.t;
        cache.valid = true;
        info.refreshed = true;
    }

    std::vector<ParamVector> vecs;
    vecs.reserve(cache.pairs.size());
    for (const auto& p : cache.pairs) {
        vecs.push_back(p.vector);
        info.eigenvalues.push_back(p.value);
        info.residuals.push_back(p.residual);
        info.unconverged = info.unconverged || !p.converged;
    }
    ParamVector nudged = nudge_gradient(grad, vecs);
    info.nudged = true;
    info.nudged_norm = kernels::norm2(nudged);
    for (const auto& v : vecs) info.max_projection = std::max(info.max_projection, std::abs(kernels::dot(nudged, v)));
    adam_step(state, params, nudged);
    return info;
}

}  // namespace hessgan
