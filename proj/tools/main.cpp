// hessgan: train small GANs with Hessian spectral instrumentation.
//
//   hessgan train     --config run.cfg [--seed N] [--out DIR] [--stride K]
//   hessgan spectrum  --config run.cfg --checkpoint FILE --player G|D [--out DIR] [--svg]
//   hessgan landscape --config run.cfg --checkpoint-dir DIR [--out DIR] [--svg]
//   hessgan compare   --config a.cfg --config-b b.cfg [--out DIR] [--svg]
//   hessgan selftest
//
// Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hessgan/errors.hpp"
#include "hessgan/experiment.hpp"
#include "hessgan/selftest.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> stride;
    bool svg = false;
};

hessgan::ExperimentConfig load_config(const Common& c) {
    auto kv = hessgan::KeyValueConfig::load(c.config);
    if (c.seed) kv.set("seed", std::to_string(*c.seed));
    if (c.stride) kv.set("measure.stride", std::to_string(*c.stride));
    if (!c.out.empty()) kv.set("output.dir", c.out);
    return hessgan::ExperimentConfig::from_kv(kv);
}

void add_common(CLI::App* cmd, Common& c, bool config_required = true) {
    auto* opt = cmd->add_option("--config", c.config, "experiment config (key = value)");
    if (config_required) opt->required();
    cmd->add_option("--seed", c.seed, "override the master seed");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--stride", c.stride, "override measure.stride (epochs between snapshots)");
    cmd->add_flag("--svg", c.svg, "also emit SVG plots");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Train small GANs with Hessian spectral instrumentation"};
    app.set_version_flag("--version", std::string("hessgan ") + HESSGAN_VERSION);
    app.require_subcommand(1);

    Common common;
    auto* train = app.add_subcommand("train", "train per config, recording λ_max traces and checkpoints");
    add_common(train, common);

    auto* spectrum = app.add_subcommand("spectrum", "Hessian eigenvalue density of one player at a checkpoint");
    add_common(spectrum, common);
    std::string checkpoint;
    std::string player = "G";
    spectrum->add_option("--checkpoint", checkpoint, "checkpoint JSON file")->required();
    spectrum->add_option("--player", player, "G or D");

    auto* landscape = app.add_subcommand("landscape", "loss grid on the top-2 eigenplane plus the trajectory");
    add_common(landscape, common);
    std::string checkpoint_dir;
    landscape->add_option("--checkpoint-dir", checkpoint_dir, "run directory or its checkpoints/ folder")
        ->required();

    auto* compare = app.add_subcommand("compare", "run two configs over their shared seed list");
    add_common(compare, common);
    std::string config_b;
    compare->add_option("--config-b", config_b, "second config")->required();

    auto* selftest = app.add_subcommand("selftest", "run the gradient, HVP, Lanczos, SLQ and kernel oracles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (selftest->parsed()) return hessgan::run_selftest(std::cout) ? 0 : kExitNumerical;

        const auto cfg = load_config(common);
        if (train->parsed()) {
            const auto out = hessgan::run_train(cfg, cfg.out_dir, &std::cerr);
            std::cout << fmt::format("wrote {} ({} steps, {} measurements)\n", out.dir.string(), out.steps,
                                     out.trace.size());
            if (out.correlation) {
                std::cout << fmt::format("pearson(lambda_max_G, lambda_max_D) = {:.4f}\n", *out.correlation);
            } else {
                std::cout << "correlation not computed: " << out.correlation_note << "\n";
            }
        } else if (spectrum->parsed()) {
            const auto d = hessgan::run_spectrum(cfg, checkpoint, hessgan::parse_player(player), cfg.out_dir,
                                                 common.svg);
            std::cout << fmt::format("wrote {} (sigma {:.4g}, integral {:.4f})\n", cfg.out_dir.string(), d.sigma,
                                     hessgan::integrate(d));
        } else if (landscape->parsed()) {
            const auto l = hessgan::run_landscape(cfg, checkpoint_dir, cfg.out_dir, common.svg);
            std::cout << fmt::format("wrote {} (G plane λ {:.4g}/{:.4g}, D plane λ {:.4g}/{:.4g})\n",
                                     cfg.out_dir.string(), l.g_plane.lambda_u, l.g_plane.lambda_v,
                                     l.d_plane.lambda_u, l.d_plane.lambda_v);
        } else if (compare->parsed()) {
            Common other = common;
            other.config = config_b;
            const auto cfg_b = load_config(other);
            const auto r = hessgan::run_compare(cfg, cfg_b, cfg.out_dir, common.svg, &std::cerr);
            std::cout << fmt::format("{}: mean final score {:.4f}\n{}: mean final score {:.4f}\n"
                                     "{} >= {} on {} of {} seeds\n",
                                     r.label_a, r.mean_final_a, r.label_b, r.mean_final_b, r.label_b, r.label_a,
                                     r.b_at_least_a, cfg.compare_seeds.size());
        }
        return 0;
    } catch (const hessgan::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const hessgan::ArgumentError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const hessgan::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const hessgan::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const hessgan::ParseError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
