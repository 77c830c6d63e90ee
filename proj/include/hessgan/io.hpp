#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hessgan/gan.hpp"
#include "hessgan/spectral.hpp"

namespace hessgan {

void write_density_csv(const SpectralDensity& density, std::ostream& out);
/// {"grid": [...], "density": [...], "sigma": σ, "m": steps, "k": probes, "seed": seed}
std::string density_to_json(const SpectralDensity& density);

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    GanArchitecture arch;
    TrainState state;  // trace is not persisted
};

std::string checkpoint_to_json(const GanArchitecture& arch, const TrainState& state);
Checkpoint checkpoint_from_json(std::string_view text);
void save_checkpoint(const std::filesystem::path& path, const GanArchitecture& arch, const TrainState& state);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

std::uint64_t fnv1a64(std::string_view bytes);

/// MANIFEST listing every regular file under `dir` (recursively, sorted) with
/// its FNV-1a 64 hash, the tool version and the run status.
void write_manifest(const std::filesystem::path& dir, bool complete, std::string_view note = {});

}  // namespace hessgan
