#pragma once
// Config-driven runs. Every run directory receives config.resolved and a
// MANIFEST; everything numeric is a pure function of (config, master seed).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hessgan/config.hpp"
#include "hessgan/landscape.hpp"
#include "hessgan/metrics.hpp"
#include "hessgan/objective.hpp"

namespace hessgan {

struct DataBundle {
    Dataset dataset;
    std::optional<MixtureSpec> mixture;  // absent for IDX data
};

DataBundle make_dataset(const ExperimentConfig& cfg, std::uint64_t master_seed);

/// Fixed evaluation batch for measurements taken at `epoch`.
struct EvalBatch {
    Batch real;
    Batch latent;
    std::uint64_t seed = 0;  // parent of every other seed used by the measurement
};
EvalBatch eval_batch(const Dataset& data, std::size_t latent_dim, std::size_t batch_size,
                     std::uint64_t master_seed, std::uint64_t epoch);

struct TrainOutcome {
    std::filesystem::path dir;
    EigenTrace trace;
    std::optional<ModeCoverage> final_coverage;
    std::optional<double> correlation;  // Pearson(λ_max_G, λ_max_D), when defined
    std::string correlation_note;
    std::uint64_t steps = 0;
    std::uint64_t epochs = 0;
    double max_nudge_projection_ratio = 0.0;  // max |<g*, v>| / ‖g‖ over nudged steps
    std::size_t nudged_steps = 0;
};

TrainOutcome run_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                       std::ostream* progress = nullptr);

/// Writes density_<tag>.csv / .json (and .svg) for the Hessian of `objective` at `params`.
SpectralDensity write_spectrum_outputs(const Objective& objective, std::span<const double> params,
                                       const SpectrumConfig& cfg, std::uint64_t seed,
                                       const std::filesystem::path& out_dir, const std::string& tag, bool svg);

SpectralDensity run_spectrum(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint, Player player,
                             const std::filesystem::path& out_dir, bool svg);

/// Checkpoint files in epoch order. `path` may be a run directory or its checkpoints/ folder.
std::vector<std::filesystem::path> list_checkpoints(const std::filesystem::path& path);

struct LandscapeOutcome {
    ProjectionPlane g_plane;
    ProjectionPlane d_plane;
    LandscapeGrid g_grid;
    LandscapeGrid d_grid;
    std::vector<std::pair<double, double>> g_trajectory;
    std::vector<std::pair<double, double>> d_trajectory;
};

LandscapeOutcome run_landscape(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint_dir,
                               const std::filesystem::path& out_dir, bool svg);

struct CompareRow {
    std::string method;
    std::uint64_t seed = 0;
    double final_score = 0.0;
    double mean_score = 0.0;
    double max_score = 0.0;
    double final_hq_fraction = 0.0;
};

struct CompareReport {
    std::string label_a;
    std::string label_b;
    std::vector<CompareRow> rows;  // all seeds of A, then all seeds of B
    std::size_t b_at_least_a = 0;  // paired seeds with final_score(B) >= final_score(A)
    double mean_final_a = 0.0;
    double mean_final_b = 0.0;
};

CompareReport run_compare(const ExperimentConfig& a, const ExperimentConfig& b, const std::filesystem::path& out_dir,
                          bool svg, std::ostream* progress = nullptr);

}  // namespace hessgan
