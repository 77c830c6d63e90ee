#include "hessgan/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "hessgan/errors.hpp"
#include "hessgan/io.hpp"
#include "hessgan/kernels.hpp"
#include "hessgan/svg.hpp"

namespace hessgan {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Children of a measurement seed.
enum : std::uint64_t { kRealRows = 0, kLatent = 1, kProbeG = 2, kProbeD = 3, kCoverage = 4, kSlq = 5, kPlane = 6 };

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    fs::remove(dir / "MANIFEST", ec);
}

std::string checkpoint_name(std::uint64_t epoch) { return fmt::format("epoch_{:06}.json", epoch); }

ordered_json nullable(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

// Writes a MANIFEST marked incomplete if `body` throws, then rethrows.
template <class F>
auto guarded(const fs::path& dir, F&& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        try {
            write_manifest(dir, false, e.what());
        } catch (...) {
        }
        throw;
    }
}

struct Measurement {
    double lambda_g = 0.0, residual_g = 0.0;
    double lambda_d = 0.0, residual_d = 0.0;
    double g_loss = 0.0, d_loss = 0.0, g_grad = 0.0, d_grad = 0.0;
    std::optional<ModeCoverage> coverage;
};

double top_eigenvalue(const Objective& obj, std::span<const double> params, std::size_t steps, std::uint64_t seed,
                      double* residual) {
    TopkOptions opts;
    opts.k = 1;
    opts.steps = std::min(steps, params.size());
    opts.seed = seed;
    const auto pairs = topk_eigenpairs(obj.hessian_at(params), params.size(), opts);
    *residual = pairs.front().residual;
    return pairs.front().value;
}

Measurement measure(const TrainState& state, const ExperimentConfig& cfg, const DataBundle& data, std::uint64_t epoch) {
    const auto& model = state.model;
    const EvalBatch eb = eval_batch(data.dataset, model.generator.input_dim(), cfg.measure.batch_size,
                                    state.seeds.master, epoch);
    Measurement m;
    const auto g_obj = generator_objective(model, eb.latent, cfg.train.g_loss);
    const auto d_obj = discriminator_objective(model, eb.real, eb.latent);
    ParamVector grad(model.theta.size());
    m.g_loss = g_obj.value_and_grad(model.theta, grad);
    m.g_grad = kernels::norm2(grad);
    grad.assign(model.phi.size(), 0.0);
    m.d_loss = d_obj.value_and_grad(model.phi, grad);
    m.d_grad = kernels::norm2(grad);
    m.lambda_g = top_eigenvalue(g_obj, model.theta, cfg.measure.lanczos_steps, derive_seed(eb.seed, kProbeG),
                                &m.residual_g);
    m.lambda_d = top_eigenvalue(d_obj, model.phi, cfg.measure.lanczos_steps, derive_seed(eb.seed, kProbeD),
                                &m.residual_d);
    if (data.mixture) {
        const Batch z = sample_latent(cfg.measure.samples, model.generator.input_dim(), derive_seed(eb.seed, kCoverage));
        m.coverage = mode_coverage(generate(model, z), *data.mixture, cfg.measure.threshold_sigmas);
    }
    return m;
}

TrainState state_for(const Checkpoint& c, const ExperimentConfig& cfg) {
    if (c.arch.latent_dim != cfg.arch.latent_dim || c.arch.data_dim != cfg.arch.data_dim ||
        c.arch.g_hidden != cfg.arch.g_hidden || c.arch.d_hidden != cfg.arch.d_hidden) {
        throw ConfigError("checkpoint architecture does not match the config");
    }
    return c.state;
}

}  // namespace

DataBundle make_dataset(const ExperimentConfig& cfg, std::uint64_t master_seed) {
    const SeedStreams seeds{master_seed};
    const auto& d = cfg.dataset;
    DataBundle out;
    switch (d.kind) {
        case DatasetConfig::Kind::ring: {
            auto m = gaussian_ring(d.modes, d.radius, d.std, d.n, seeds.seed(Stream::data));
            out.dataset = std::move(m.dataset);
            out.mixture = std::move(m.spec);
            break;
        }
        case DatasetConfig::Kind::grid: {
            auto m = gaussian_grid(d.side, d.spacing, d.std, d.n, seeds.seed(Stream::data));
            out.dataset = std::move(m.dataset);
            out.mixture = std::move(m.spec);
            break;
        }
        case DatasetConfig::Kind::idx:
            out.dataset = load_idx(d.path);
            break;
    }
    if (out.dataset.dim() != cfg.arch.data_dim) {
        throw ConfigError(fmt::format("model.data_dim = {} but the dataset has {} features", cfg.arch.data_dim,
                                      out.dataset.dim()));
    }
    return out;
}

EvalBatch eval_batch(const Dataset& data, std::size_t latent_dim, std::size_t batch_size, std::uint64_t master_seed,
                     std::uint64_t epoch) {
    EvalBatch eb;
    eb.seed = SeedStreams{master_seed}.seed(Stream::measure, epoch);
    const std::size_t n = std::min(batch_size, data.size());
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    std::mt19937_64 rng(derive_seed(eb.seed, kRealRows));
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
        std::swap(rows[i], rows[pick(rng)]);
    }
    rows.resize(n);
    eb.real = gather_rows(data.samples, rows);
    eb.latent = sample_latent(n, latent_dim, derive_seed(eb.seed, kLatent));
    return eb;
}

TrainOutcome run_train(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream* progress) {
    cfg.validate();
    prepare_dir(out_dir);
    return guarded(out_dir, [&] {
        TrainOutcome out;
        out.dir = out_dir;
        write_text_file(out_dir / "config.resolved", cfg.resolved());
        const DataBundle data = make_dataset(cfg, cfg.seed);
        TrainState state = TrainState::create(cfg.arch, cfg.train, cfg.seed);

        fs::create_directories(out_dir / "checkpoints");
        auto steps_log = open_out(out_dir / "steps.jsonl");
        write_trace_header(steps_log, cfg.train);
        auto meas_csv = open_out(out_dir / "measurements.csv");
        meas_csv << "epoch,step,lambda_max_G,residual_G,lambda_max_D,residual_D,loss_G,loss_D,grad_norm_G,"
                    "grad_norm_D,score,high_quality_fraction\n";

        std::optional<std::uint64_t> last_measured, last_checkpoint;
        auto take_measurement = [&](std::uint64_t epoch) {
            const Measurement m = measure(state, cfg, data, epoch);
            const double score = m.coverage ? m.coverage->score() : std::nan("");
            const double hq = m.coverage ? m.coverage->high_quality_fraction : std::nan("");
            out.trace.append(epoch, m.lambda_g, m.lambda_d, score);
            meas_csv << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", epoch, state.step, m.lambda_g,
                                    m.residual_g, m.lambda_d, m.residual_d, m.g_loss, m.d_loss, m.g_grad, m.d_grad,
                                    score, hq);
            out.final_coverage = m.coverage;
            last_measured = epoch;
            if (progress) {
                *progress << fmt::format("[{}] epoch {} step {}: lambda_max G {:.4g} D {:.4g}, score {:.3f}\n",
                                         cfg.name, epoch, state.step, m.lambda_g, m.lambda_d, score);
            }
        };
        auto save = [&](std::uint64_t epoch) {
            save_checkpoint(out_dir / "checkpoints" / checkpoint_name(epoch), cfg.arch, state);
            last_checkpoint = epoch;
        };

        save(0);
        std::uint64_t position = 0;
        for (std::size_t e = 0; e < cfg.epochs; ++e) {
            if (cfg.train.max_steps != 0 && state.step >= cfg.train.max_steps) break;
            const bool full = gda_epoch(state, data.dataset, cfg.train, &steps_log);
            if (!full) {
                position = state.epoch + 1;  // partial epoch
                break;
            }
            position = state.epoch;
            if (position % cfg.measure.stride == 0) take_measurement(position);
            if (position % cfg.checkpoint_stride == 0) save(position);
        }
        if (last_measured != position) take_measurement(position);
        if (last_checkpoint != position) save(position);
        steps_log.close();
        meas_csv.close();

        {
            auto csv = open_out(out_dir / "eigentrace.csv");
            write_eigen_trace_csv(out.trace, csv);
        }
        out.steps = state.step;
        out.epochs = position;

        for (const auto& rec : state.trace) {
            if (!rec.info.nudged || rec.info.grad_norm == 0.0) continue;
            out.nudged_steps += 1;
            out.max_nudge_projection_ratio =
                std::max(out.max_nudge_projection_ratio, rec.info.max_projection / rec.info.grad_norm);
        }

        if (out.trace.size() < 2) {
            out.correlation_note = "fewer than 2 measurements";
        } else {
            try {
                out.correlation = trace_correlation(out.trace);
            } catch (const ArgumentError& e) {
                out.correlation_note = e.what();
            }
        }

        ordered_json summary;
        summary["tool"] = fmt::format("hessgan {}", HESSGAN_VERSION);
        summary["name"] = cfg.name;
        summary["seed"] = cfg.seed;
        summary["optimizer"] = optimizer_name(cfg.train.optimizer);
        summary["epochs"] = out.epochs;
        summary["steps"] = out.steps;
        summary["measurements"] = out.trace.size();
        if (out.final_coverage) {
            const auto& c = *out.final_coverage;
            summary["final"] = {{"score", c.score()},
                                {"covered_modes", c.covered_modes},
                                {"total_modes", c.total_modes},
                                {"high_quality_fraction", c.high_quality_fraction},
                                {"per_mode_counts", c.per_mode_counts}};
        }
        summary["correlation_lambda_G_lambda_D"] = out.correlation ? ordered_json(*out.correlation) : ordered_json(nullptr);
        if (!out.correlation_note.empty()) summary["correlation_note"] = out.correlation_note;
        if (cfg.train.optimizer == OptimizerKind::nugan) {
            summary["nudged_steps"] = out.nudged_steps;
            summary["max_nudge_projection_ratio"] = out.max_nudge_projection_ratio;
        }
        write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
        write_manifest(out_dir, true);
        return out;
    });
}

SpectralDensity write_spectrum_outputs(const Objective& objective, std::span<const double> params,
                                       const SpectrumConfig& cfg, std::uint64_t seed, const fs::path& out_dir,
                                       const std::string& tag, bool svg) {
    SlqOptions opts;
    opts.steps = std::min(cfg.steps, params.size());
    opts.probes = cfg.probes;
    opts.grid_points = cfg.grid_points;
    opts.sigma = cfg.sigma > 0.0 ? SigmaRule::absolute(cfg.sigma) : SigmaRule::relative(cfg.sigma_fraction);
    opts.seed = seed;
    SpectralDensity density = slq_density(objective.hessian_at(params), params.size(), opts);
    {
        auto csv = open_out(out_dir / fmt::format("density_{}.csv", tag));
        write_density_csv(density, csv);
    }
    write_text_file(out_dir / fmt::format("density_{}.json", tag), density_to_json(density) + "\n");
    if (svg) {
        write_text_file(out_dir / fmt::format("density_{}.svg", tag),
                        svg::density_plot(density, fmt::format("Hessian eigenvalue density ({})", tag)));
    }
    return density;
}

SpectralDensity run_spectrum(const ExperimentConfig& cfg, const fs::path& checkpoint, Player player,
                             const fs::path& out_dir, bool svg) {
    cfg.validate();
    const Checkpoint ck = load_checkpoint(checkpoint);
    prepare_dir(out_dir);
    return guarded(out_dir, [&] {
        write_text_file(out_dir / "config.resolved", cfg.resolved());
        const TrainState state = state_for(ck, cfg);
        const DataBundle data = make_dataset(cfg, state.seeds.master);
        const EvalBatch eb = eval_batch(data.dataset, cfg.arch.latent_dim, cfg.spectrum.batch_size,
                                        state.seeds.master, state.epoch);
        const std::uint64_t seed = derive_seed(eb.seed, kSlq);
        const std::string tag(player_name(player));
        SpectralDensity density;
        if (player == Player::generator) {
            density = write_spectrum_outputs(generator_objective(state.model, eb.latent, cfg.train.g_loss),
                                             state.model.theta, cfg.spectrum, seed, out_dir, tag, svg);
        } else {
            density = write_spectrum_outputs(discriminator_objective(state.model, eb.real, eb.latent),
                                             state.model.phi, cfg.spectrum, seed, out_dir, tag, svg);
        }
        const SpectralSummary s = spectral_summary(density);
        ordered_json j;
        j["tool"] = fmt::format("hessgan {}", HESSGAN_VERSION);
        j["checkpoint_epoch"] = state.epoch;
        j["player"] = tag;
        j["integral"] = integrate(density);
        j["lambda_min"] = s.lambda_min;
        j["lambda_max"] = s.lambda_max;
        j["negative_mass"] = s.negative_mass;
        write_text_file(out_dir / fmt::format("spectrum_{}.json", tag), j.dump(2) + "\n");
        write_manifest(out_dir, true);
        return density;
    });
}

std::vector<fs::path> list_checkpoints(const fs::path& path) {
    fs::path dir = path;
    if (fs::is_directory(path / "checkpoints")) dir = path / "checkpoints";
    if (!fs::is_directory(dir)) throw IoError("checkpoint directory not found: " + path.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("epoch_", 0) == 0 && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    if (files.empty()) throw IoError("no checkpoints in " + dir.string());
    std::sort(files.begin(), files.end());
    return files;
}

LandscapeOutcome run_landscape(const ExperimentConfig& cfg, const fs::path& checkpoint_dir, const fs::path& out_dir,
                               bool svg) {
    cfg.validate();
    const auto files = list_checkpoints(checkpoint_dir);
    std::vector<TrainState> states;
    for (const auto& f : files) states.push_back(state_for(load_checkpoint(f), cfg));
    prepare_dir(out_dir);
    return guarded(out_dir, [&] {
        write_text_file(out_dir / "config.resolved", cfg.resolved());
        const TrainState& last = states.back();
        const DataBundle data = make_dataset(cfg, last.seeds.master);
        const EvalBatch eb = eval_batch(data.dataset, cfg.arch.latent_dim, cfg.landscape.batch_size,
                                        last.seeds.master, last.epoch);
        LandscapeOutcome out;
        ordered_json doc;
        doc["tool"] = fmt::format("hessgan {}", HESSGAN_VERSION);
        doc["checkpoints"] = states.size();
        doc["anchor_epoch"] = last.epoch;

        auto one_player = [&](Player player, const Objective& obj, std::span<const double> anchor,
                              const std::vector<ParamVector>& traj, ProjectionPlane& plane, LandscapeGrid& grid,
                              std::vector<std::pair<double, double>>& points) {
            PlaneOptions po;
            po.lanczos_steps = std::min(cfg.landscape.lanczos_steps, anchor.size());
            po.seed = derive_seed(eb.seed, kPlane + static_cast<std::uint64_t>(player));
            plane = plane_from_topk(obj, anchor, po);
            points = project_trajectory(traj, plane);
            grid = loss_grid(obj, plane, cfg.landscape.half_width, cfg.landscape.resolution, cfg.landscape.log_scale);
            const std::string tag(player_name(player));
            {
                auto csv = open_out(out_dir / fmt::format("landscape_{}.csv", tag));
                write_landscape_csv(grid, csv);
                auto tcsv = open_out(out_dir / fmt::format("trajectory_{}.csv", tag));
                write_trajectory_csv(points, tcsv);
            }
            ordered_json p;
            p["lambda_u"] = plane.lambda_u;
            p["lambda_v"] = plane.lambda_v;
            p["residual_u"] = plane.residual_u;
            p["residual_v"] = plane.residual_v;
            p["degenerate"] = plane.degenerate;
            p["anchor_loss"] = obj.value(anchor);
            p["log_scaled"] = grid.log_scaled;
            p["clamped_points"] = grid.clamped_points;
            p["alphas"] = grid.alphas;
            p["betas"] = grid.betas;
            ordered_json rows = ordered_json::array();
            for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
                ordered_json row = ordered_json::array();
                for (std::size_t j = 0; j < grid.betas.size(); ++j) row.push_back(nullable(grid.loss(i, j)));
                rows.push_back(row);
            }
            p["loss"] = rows;
            ordered_json tj = ordered_json::array();
            for (const auto& [a, b] : points) tj.push_back({a, b});
            p["trajectory"] = tj;
            doc["players"][tag] = p;
            if (svg) {
                write_text_file(out_dir / fmt::format("landscape_{}.svg", tag),
                                svg::landscape_plot(grid, points, fmt::format("Loss landscape ({})", tag)));
            }
        };

        std::vector<ParamVector> thetas, phis;
        for (const auto& s : states) {
            thetas.push_back(s.model.theta);
            phis.push_back(s.model.phi);
        }
        one_player(Player::generator, generator_objective(last.model, eb.latent, cfg.train.g_loss), last.model.theta,
                   thetas, out.g_plane, out.g_grid, out.g_trajectory);
        one_player(Player::discriminator, discriminator_objective(last.model, eb.real, eb.latent), last.model.phi,
                   phis, out.d_plane, out.d_grid, out.d_trajectory);
        write_text_file(out_dir / "landscape.json", doc.dump() + "\n");
        write_manifest(out_dir, true);
        return out;
    });
}

CompareReport run_compare(const ExperimentConfig& a, const ExperimentConfig& b, const fs::path& out_dir, bool svg,
                          std::ostream* progress) {
    a.validate();
    b.validate();
    if (a.compare_seeds != b.compare_seeds) throw ConfigError("compare.seeds differs between the two configs");
    prepare_dir(out_dir);
    return guarded(out_dir, [&] {
        CompareReport report;
        report.label_a = "A_" + a.name;
        report.label_b = "B_" + b.name;
        write_text_file(out_dir / "config_A.resolved", a.resolved());
        write_text_file(out_dir / "config_B.resolved", b.resolved());

        std::vector<svg::Series> series;
        std::string traces = "method,seed,epoch,score,lambda_max_G,lambda_max_D\n";
        auto run_all = [&](const ExperimentConfig& base, const std::string& label) {
            std::vector<double> finals;
            for (std::uint64_t seed : base.compare_seeds) {
                ExperimentConfig cfg = base;
                cfg.seed = seed;
                const auto outcome = run_train(cfg, out_dir / label / fmt::format("seed_{}", seed), progress);
                const auto& t = outcome.trace;
                CompareRow row;
                row.method = label;
                row.seed = seed;
                row.final_score = t.score.back();
                row.mean_score = std::accumulate(t.score.begin(), t.score.end(), 0.0) / static_cast<double>(t.size());
                row.max_score = *std::max_element(t.score.begin(), t.score.end());
                row.final_hq_fraction = outcome.final_coverage ? outcome.final_coverage->high_quality_fraction
                                                               : std::nan("");
                report.rows.push_back(row);
                finals.push_back(row.final_score);
                svg::Series s{fmt::format("{} seed {}", label, seed), {}, t.score};
                for (std::size_t i = 0; i < t.size(); ++i) {
                    s.x.push_back(static_cast<double>(t.epochs[i]));
                    traces += fmt::format("{},{},{},{},{},{}\n", label, seed, t.epochs[i], t.score[i],
                                          t.lambda_max_g[i], t.lambda_max_d[i]);
                }
                series.push_back(std::move(s));
            }
            return finals;
        };
        const auto fa = run_all(a, report.label_a);
        const auto fb = run_all(b, report.label_b);
        for (std::size_t i = 0; i < fa.size(); ++i) report.b_at_least_a += fb[i] >= fa[i] ? 1 : 0;
        const auto mean = [](const std::vector<double>& v) {
            return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        };
        report.mean_final_a = mean(fa);
        report.mean_final_b = mean(fb);

        std::string per_seed = "method,seed,final_score,mean_score,max_score,final_high_quality_fraction\n";
        for (const auto& r : report.rows) {
            per_seed += fmt::format("{},{},{},{},{},{}\n", r.method, r.seed, r.final_score, r.mean_score,
                                    r.max_score, r.final_hq_fraction);
        }
        write_text_file(out_dir / "compare_seeds.csv", per_seed);
        std::string table = "method,mean,max\n";
        table += fmt::format("{},{},{}\n", report.label_a, report.mean_final_a, *std::max_element(fa.begin(), fa.end()));
        table += fmt::format("{},{},{}\n", report.label_b, report.mean_final_b, *std::max_element(fb.begin(), fb.end()));
        write_text_file(out_dir / "compare_table.csv", table);
        write_text_file(out_dir / "compare_traces.csv", traces);

        ordered_json j;
        j["tool"] = fmt::format("hessgan {}", HESSGAN_VERSION);
        j["A"] = report.label_a;
        j["B"] = report.label_b;
        j["seeds"] = a.compare_seeds;
        j["mean_final_A"] = report.mean_final_a;
        j["mean_final_B"] = report.mean_final_b;
        j["paired_B_at_least_A"] = report.b_at_least_a;
        write_text_file(out_dir / "compare.json", j.dump(2) + "\n");
        if (svg) {
            svg::PlotOptions o;
            o.title = "Mode-coverage score during training";
            o.x_label = "epoch";
            o.y_label = "score";
            write_text_file(out_dir / "compare_traces.svg", svg::line_plot(series, o));
        }
        write_manifest(out_dir, true);
        return report;
    });
}

}  // namespace hessgan
