#pragma once

// GAN objectives and the alternating training loop.
//
// Sign convention: the trainer always *minimizes* a descent form of each
// player's objective.
//   D: descends  -(E[log D(x)] + E[log(1 - D(G(z)))])
//   G: descends  -E[log D(G(z))]      (non-saturating, default)
//           or    E[log(1 - D(G(z)))] (minimax)
// D's probabilities are clamped to [1e-7, 1 - 1e-7] before every logarithm.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "hessgan/data.hpp"
#include "hessgan/mlp.hpp"
#include "hessgan/optim.hpp"
#include "hessgan/rng.hpp"

namespace hessgan {

struct GanArchitecture {
    std::size_t latent_dim = 16;
    std::size_t data_dim = 2;
    std::vector<std::size_t> g_hidden{64, 64};
    std::vector<std::size_t> d_hidden{64, 64};
    ActivationSpec g_activation{Activation::tanh};
    ActivationSpec d_activation{Activation::tanh};

    /// latent -> hidden... -> data, identity head.
    MlpNetwork generator() const;
    /// data -> hidden... -> 1, sigmoid head.
    MlpNetwork discriminator() const;
};

struct GanModel {
    MlpNetwork generator;
    MlpNetwork discriminator;
    ParamVector theta;  // generator weights
    ParamVector phi;    // discriminator weights

    static GanModel create(const GanArchitecture& arch, std::uint64_t init_seed);
    void validate() const;
};

Matrix generate(const GanModel& model, const Batch& latent);
/// D's raw sigmoid output (unclamped), one row per sample.
Matrix discriminate(const GanModel& model, const Batch& samples);

/// Batch mean of log D(x) + log(1 - D(G(z))): the value D ascends.
double d_loss(const GanModel& model, const Batch& real, const Batch& latent);
/// Batch mean of log(1 - D(G(z))): the minimax generator loss, descended.
double g_loss_minimax(const GanModel& model, const Batch& latent);
/// Batch mean of -log D(G(z)): the non-saturating generator loss, descended.
double g_loss_nonsaturating(const GanModel& model, const Batch& latent);

enum class GeneratorLoss { nonsaturating, minimax };
GeneratorLoss parse_generator_loss(std::string_view text);
std::string_view generator_loss_name(GeneratorLoss loss);

/// Descent-form generator objective over θ (D frozen at the model's φ).
StackObjective generator_objective(const GanModel& model, const Batch& latent, GeneratorLoss loss);
/// Descent-form discriminator objective over φ: the negated d_loss, with the
/// fake half produced by G at the model's θ.
StackObjective discriminator_objective(const GanModel& model, const Batch& real, const Batch& latent);

enum class OptimizerKind { adam, nugan };
OptimizerKind parse_optimizer(std::string_view text);
std::string_view optimizer_name(OptimizerKind kind);

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t n_critic = 1;  // D steps per G step
    GeneratorLoss g_loss = GeneratorLoss::nonsaturating;
    OptimizerKind optimizer = OptimizerKind::adam;
    AdamHyper g_adam;
    AdamHyper d_adam;
    NudgeConfig nudge;
    std::uint64_t max_steps = 0;  // G steps; 0 = no limit

    void validate() const;
};

struct StepRecord {
    std::uint64_t step = 0;  // G-step counter when the record was made
    std::uint64_t epoch = 0;
    Player player = Player::discriminator;
    StepInfo info;
};

struct TrainState {
    GanModel model;
    AdamState g_opt;
    AdamState d_opt;
    NudgeCache g_cache;
    NudgeCache d_cache;
    std::uint64_t step = 0;   // completed G steps
    std::uint64_t epoch = 0;  // completed epochs
    std::uint64_t draws = 0;  // latent/probe stream counter
    SeedStreams seeds;
    std::vector<StepRecord> trace;

    static TrainState create(const GanArchitecture& arch, const TrainConfig& cfg, std::uint64_t master_seed);
};

/// One update of `player` on the given batches, nudged when the config asks for it.
StepInfo nugan_step(Player player, TrainState& state, const Batch& real, const Batch& latent,
                    const TrainConfig& cfg, std::uint64_t probe_seed);

/// Header line of the JSON-lines step log (records the D-then-G alternation).
void write_trace_header(std::ostream& out, const TrainConfig& cfg);
void write_step_record(std::ostream& out, const StepRecord& record);

/// One pass over the shuffled dataset: per minibatch, n_critic D steps then
/// one G step, each with a fresh latent draw. The trailing partial minibatch
/// is dropped. Returns false when max_steps stopped the epoch early.
bool gda_epoch(TrainState& state, const Dataset& data, const TrainConfig& cfg,
               std::ostream* step_log = nullptr);

std::size_t minibatches_per_epoch(const Dataset& data, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Local Nash equilibrium diagnostics

enum class LneVerdict { local_min_candidate, local_max_candidate, saddle, non_critical };
std::string_view verdict_name(LneVerdict v);

struct PlayerCurvature {
    double grad_norm = 0.0;
    double min_eig = 0.0;
    double min_residual = 0.0;
    double max_eig = 0.0;
    double max_residual = 0.0;
    LneVerdict verdict = LneVerdict::non_critical;
};

/// Eigenvalues are those of each player's *descent* objective, so a
/// discriminator local_min_candidate is the ∇²_φ L_D ⪯ 0 condition on the
/// ascent objective.
struct LneReport {
    PlayerCurvature generator;
    PlayerCurvature discriminator;
};

struct LneOptions {
    double grad_threshold = 1e-2;
    double residual_tol = 1e-3;
    std::size_t lanczos_steps = 40;
    std::uint64_t seed = 0;
};

/// Classify one player's critical point from its gradient norm and extreme
/// Hessian eigenvalues. An eigenvalue only counts as signed beyond
/// max(residual_tol, its own residual).
PlayerCurvature classify_critical_point(const Objective& objective, std::span<const double> params,
                                        const LneOptions& options);

LneReport lne_check(const Objective& g_objective, std::span<const double> theta,
                    const Objective& d_objective, std::span<const double> phi, const LneOptions& options);

LneReport lne_check(const TrainState& state, const Batch& real, const Batch& latent,
                    GeneratorLoss g_loss, const LneOptions& options);

}  // namespace hessgan
