#include "hessgan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <json.hpp>

#include "hessgan/errors.hpp"
#include "hessgan/kernels.hpp"

namespace hessgan {

MlpNetwork GanArchitecture::generator() const {
    std::vector<std::size_t> dims{latent_dim};
    dims.insert(dims.end(), g_hidden.begin(), g_hidden.end());
    dims.push_back(data_dim);
    std::vector<ActivationSpec> acts(g_hidden.size(), g_activation);
    acts.push_back({Activation::identity});
    return MlpNetwork(std::move(dims), std::move(acts));
}

MlpNetwork GanArchitecture::discriminator() const {
    std::vector<std::size_t> dims{data_dim};
    dims.insert(dims.end(), d_hidden.begin(), d_hidden.end());
    dims.push_back(1);
    std::vector<ActivationSpec> acts(d_hidden.size(), d_activation);
    acts.push_back({Activation::sigmoid});
    return MlpNetwork(std::move(dims), std::move(acts));
}

GanModel GanModel::create(const GanArchitecture& arch, std::uint64_t init_seed) {
    GanModel m{arch.generator(), arch.discriminator(), {}, {}};
    m.theta = m.generator.init_params(derive_seed(init_seed, 0));
    m.phi = m.discriminator.init_params(derive_seed(init_seed, 1));
    return m;
}

void GanModel::validate() const {
    if (generator.output_dim() != discriminator.input_dim()) {
        throw ConfigError("generator output dim " + std::to_string(generator.output_dim()) +
                          " does not match discriminator input dim " +
                          std::to_string(discriminator.input_dim()));
    }
    if (discriminator.output_dim() != 1) throw ConfigError("discriminator must have a single output");
    if (theta.size() != generator.param_count() || phi.size() != discriminator.param_count()) {
        throw ConfigError("model parameter vectors do not match the networks");
    }
}

Matrix generate(const GanModel& model, const Batch& latent) {
    return forward(model.generator, model.theta, latent);
}

Matrix discriminate(const GanModel& model, const Batch& samples) {
    return forward(model.discriminator, model.phi, samples);
}

namespace {

double clamped_log(double p) { return std::log(std::clamp(p, kProbClamp, 1.0 - kProbClamp)); }
double clamped_log1m(double p) { return std::log(1.0 - std::clamp(p, kProbClamp, 1.0 - kProbClamp)); }

double mean_of(const Matrix& m, double (*f)(double)) {
    double s = 0.0;
    for (double v : m.data()) s += f(v);
    return s / static_cast<double>(m.rows());
}

}  // namespace

double d_loss(const GanModel& model, const Batch& real, const Batch& latent) {
    if (real.rows() == 0 || latent.rows() == 0) throw ArgumentError("d_loss: empty batch");
    return mean_of(discriminate(model, real), clamped_log) +
           mean_of(discriminate(model, generate(model, latent)), clamped_log1m);
}

double g_loss_minimax(const GanModel& model, const Batch& latent) {
    if (latent.rows() == 0) throw ArgumentError("g_loss_minimax: empty batch");
    return mean_of(discriminate(model, generate(model, latent)), clamped_log1m);
}

double g_loss_nonsaturating(const GanModel& model, const Batch& latent) {
    if (latent.rows() == 0) throw ArgumentError("g_loss_nonsaturating: empty batch");
    return -mean_of(discriminate(model, generate(model, latent)), clamped_log);
}

GeneratorLoss parse_generator_loss(std::string_view text) {
    if (text == "nonsaturating" || text == "ns") return GeneratorLoss::nonsaturating;
    if (text == "minimax") return GeneratorLoss::minimax;
    throw ConfigError("unknown generator loss '" + std::string(text) + "'");
}

std::string_view generator_loss_name(GeneratorLoss loss) {
    return loss == GeneratorLoss::nonsaturating ? "nonsaturating" : "minimax";
}

StackObjective generator_objective(const GanModel& model, const Batch& latent, GeneratorLoss loss) {
    model.validate();
    auto spec = ScalarLossSpec::of(loss == GeneratorLoss::nonsaturating ? ScalarLossSpec::Kind::neg_log
                                                                         : ScalarLossSpec::Kind::log_one_minus);
    return StackObjective({StackSegment{model.generator, {}, true},
                           StackSegment{model.discriminator, model.phi, false}},
                          std::move(spec), latent);
}

StackObjective discriminator_objective(const GanModel& model, const Batch& real, const Batch& latent) {
    model.validate();
    if (real.rows() == 0 || latent.rows() == 0) throw ArgumentError("discriminator objective: empty batch");
    Matrix fake = generate(model, latent);
    const std::size_t nr = real.rows();
    const std::size_t nf = fake.rows();
    std::vector<double> labels(nr + nf, 0.0);
    std::fill_n(labels.begin(), nr, 1.0);
    auto spec = ScalarLossSpec::bce(std::move(labels));
    spec.row_weights.assign(nr + nf, 1.0 / static_cast<double>(nf));
    std::fill_n(spec.row_weights.begin(), nr, 1.0 / static_cast<double>(nr));
    return StackObjective({StackSegment{model.discriminator, {}, true}}, std::move(spec), vstack(real, fake));
}

OptimizerKind parse_optimizer(std::string_view text) {
    if (text == "adam") return OptimizerKind::adam;
    if (text == "nugan" || text == "nudged-adam") return OptimizerKind::nugan;
    throw ConfigError("unknown optimizer '" + std::string(text) + "'");
}

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "nugan"; }

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    if (n_critic == 0) throw ConfigError("n_critic must be >= 1");
    AdamState::create(0, g_adam);
    AdamState::create(0, d_adam);
    if (optimizer == OptimizerKind::nugan) nudge.validate();
}

TrainState TrainState::create(const GanArchitecture& arch, const TrainConfig& cfg, std::uint64_t master_seed) {
    cfg.validate();
    TrainState s;
    s.seeds.master = master_seed;
    s.model = GanModel::create(arch, s.seeds.seed(Stream::init));
    s.g_opt = AdamState::create(s.model.theta.size(), cfg.g_adam);
    s.d_opt = AdamState::create(s.model.phi.size(), cfg.d_adam);
    return s;
}

StepInfo nugan_step(Player player, TrainState& state, const Batch& real, const Batch& latent,
                    const TrainConfig& cfg, std::uint64_t probe_seed) {
    const NudgeConfig* nudge =
        cfg.optimizer == OptimizerKind::nugan && cfg.nudge.applies_to(player) ? &cfg.nudge : nullptr;
    if (player == Player::generator) {
        auto obj = generator_objective(state.model, latent, cfg.g_loss);
        return nudged_adam_step(obj, state.model.theta, state.g_opt, state.g_cache, nudge, probe_seed);
    }
    auto obj = discriminator_objective(state.model, real, latent);
    return nudged_adam_step(obj, state.model.phi, state.d_opt, state.d_cache, nudge, probe_seed);
}

void write_trace_header(std::ostream& out, const TrainConfig& cfg) {
    nlohmann::ordered_json h;
    h["header"] = {
        {"alternation", "D-then-G"},
        {"n_critic", cfg.n_critic},
        {"optimizer", optimizer_name(cfg.optimizer)},
        {"g_loss", generator_loss_name(cfg.g_loss)},
        {"batch_size", cfg.batch_size},
    };
    if (cfg.optimizer == OptimizerKind::nugan) {
        h["header"]["nudge"] = {{"k", cfg.nudge.k},
                                {"recompute_stride", cfg.nudge.recompute_stride},
                                {"lanczos_steps", cfg.nudge.lanczos_steps},
                                {"eigen_mode", eigen_mode_name(cfg.nudge.eigen_mode)},
                                {"apply_to", nudge_target_name(cfg.nudge.apply_to)}};
    }
    out << h.dump() << '\n';
}

void write_step_record(std::ostream& out, const StepRecord& r) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["epoch"] = r.epoch;
    j["player"] = player_name(r.player);
    j["loss"] = r.info.loss;
    j["grad_norm"] = r.info.grad_norm;
    j["nudged_grad_norm"] = r.info.nudged_norm;
    if (r.info.nudged) {
        j["max_projection"] = r.info.max_projection;
        j["eigenvalues"] = r.info.eigenvalues;
        j["residuals"] = r.info.residuals;
        j["refreshed"] = r.info.refreshed;
    }
    j["warnings"] = r.info.unconverged ? nlohmann::ordered_json::array({"unconverged_eigenpair"})
                                       : nlohmann::ordered_json::array();
    out << j.dump() << '\n';
}

std::size_t minibatches_per_epoch(const Dataset& data, const TrainConfig& cfg) {
    return data.size() / cfg.batch_size;
}

bool gda_epoch(TrainState& state, const Dataset& data, const TrainConfig& cfg, std::ostream* step_log) {
    if (data.size() == 0) throw ArgumentError("gda_epoch: empty dataset");
    if (cfg.batch_size > data.size()) {
        throw ConfigError("batch size " + std::to_string(cfg.batch_size) + " exceeds dataset size " +
                          std::to_string(data.size()));
    }
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(state.seeds.seed(Stream::data, state.epoch));
    std::shuffle(order.begin(), order.end(), rng);

    const std::size_t batches = minibatches_per_epoch(data, cfg);
    const std::size_t d_z = state.model.generator.input_dim();
    for (std::size_t b = 0; b < batches; ++b) {
        if (cfg.max_steps != 0 && state.step >= cfg.max_steps) return false;
        Batch real = gather_rows(data.samples, std::span(order).subspan(b * cfg.batch_size, cfg.batch_size));
        auto one_step = [&](Player player) {
            const std::uint64_t draw = state.draws++;
            Batch latent = sample_latent(cfg.batch_size, d_z, state.seeds.seed(Stream::latent, draw));
            StepRecord rec;
            rec.step = state.step;
            rec.epoch = state.epoch;
            rec.player = player;
            try {
                rec.info = nugan_step(player, state, real, latent, cfg, state.seeds.seed(Stream::probes, draw));
            } catch (const NumericalError& e) {
                throw NumericalError("epoch " + std::to_string(state.epoch) + ", step " +
                                     std::to_string(state.step) + ", player " +
                                     std::string(player_name(player)) + ": " + e.what());
            }
            if (step_log) write_step_record(*step_log, rec);
            state.trace.push_back(std::move(rec));
        };
        for (std::size_t c = 0; c < cfg.n_critic; ++c) one_step(Player::discriminator);
        one_step(Player::generator);
        state.step += 1;
    }
    state.epoch += 1;
    return true;
}

// ---------------------------------------------------------------------------

std::string_view verdict_name(LneVerdict v) {
    switch (v) {
        case LneVerdict::local_min_candidate:
            return "local_min_candidate";
        case LneVerdict::local_max_candidate:
            return "local_max_candidate";
        case LneVerdict::saddle:
            return "saddle";
        case LneVerdict::non_critical:
            return "non_critical";
    }
    return "?";
}

PlayerCurvature classify_critical_point(const Objective& objective, std::span<const double> params,
                                        const LneOptions& options) {
    if (!(options.grad_threshold > 0.0) || !(options.residual_tol > 0.0)) {
        throw ArgumentError("lne_check: thresholds must be positive");
    }
    PlayerCurvature pc;
    ParamVector grad(params.size(), 0.0);
    objective.value_and_grad(params, grad);
    pc.grad_norm = kernels::norm2(grad);

    HvpOracle oracle = objective.hessian_at(params);
    TopkOptions opts;
    opts.k = 1;
    opts.steps = options.lanczos_steps;
    opts.tol = options.residual_tol;
    opts.seed = options.seed;
    opts.mode = EigenMode::largest_algebraic;
    const EigenPair top = topk_eigenpairs(oracle, params.size(), opts).front();
    opts.mode = EigenMode::smallest_algebraic;
    const EigenPair bottom = topk_eigenpairs(oracle, params.size(), opts).front();
    pc.max_eig = top.value;
    pc.max_residual = top.residual;
    pc.min_eig = bottom.value;
    pc.min_residual = bottom.residual;

    const double min_margin = std::max(options.residual_tol, bottom.residual);
    const double max_margin = std::max(options.residual_tol, top.residual);
    const bool has_negative = pc.min_eig < -min_margin;
    const bool has_positive = pc.max_eig > max_margin;
    if (pc.grad_norm > options.grad_threshold) {
        pc.verdict = LneVerdict::non_critical;
    } else if (has_negative && has_positive) {
        pc.verdict = LneVerdict::saddle;
    } else if (!has_negative) {
        pc.verdict = LneVerdict::local_min_candidate;
    } else {
        pc.verdict = LneVerdict::local_max_candidate;
    }
    return pc;
}

LneReport lne_check(const Objective& g_objective, std::span<const double> theta,
                    const Objective& d_objective, std::span<const double> phi, const LneOptions& options) {
    LneReport r;
    r.generator = classify_critical_point(g_objective, theta, options);
    LneOptions d_opts = options;
    d_opts.seed = derive_seed(options.seed, 1);
    r.discriminator = classify_critical_point(d_objective, phi, d_opts);
    return r;
}

LneReport lne_check(const TrainState& state, const Batch& real, const Batch& latent, GeneratorLoss g_loss,
                    const LneOptions& options) {
    auto g_obj = generator_objective(state.model, latent, g_loss);
    auto d_obj = discriminator_objective(state.model, real, latent);
    return lne_check(g_obj, state.model.theta, d_obj, state.model.phi, options);
}

}  // namespace hessgan
