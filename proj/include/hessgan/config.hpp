#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hessgan/gan.hpp"

namespace hessgan {

/// Flat `section.key = value` text. `#` starts a comment; blank lines are
/// ignored; a key may appear once.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, std::string_view source = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const;
    std::vector<std::uint64_t> get_uints(const std::string& key, const std::vector<std::uint64_t>& fallback) const;

    /// Throws ConfigError naming the first key that no getter has consumed.
    void reject_unused() const;

private:
    const std::string* find(const std::string& key) const;
    std::string where(const std::string& key) const;

    std::string source_;
    std::map<std::string, std::string> values_;
    std::map<std::string, std::size_t> lines_;
    mutable std::set<std::string> used_;
};

struct DatasetConfig {
    enum class Kind { ring, grid, idx };
    Kind kind = Kind::ring;
    std::size_t modes = 8;       // ring
    double radius = 2.0;         // ring
    std::size_t side = 5;        // grid
    double spacing = 2.0;        // grid
    double std = 0.02;
    std::size_t n = 50000;
    std::filesystem::path path;  // idx
};

struct MeasureConfig {
    std::size_t stride = 1;  // epochs between snapshots
    std::size_t lanczos_steps = 40;
    std::size_t batch_size = 256;
    std::size_t samples = 2000;
    double threshold_sigmas = 3.0;
};

struct SpectrumConfig {
    std::size_t steps = 80;
    std::size_t probes = 10;
    std::size_t grid_points = 1024;
    double sigma = 0.0;           // > 0: absolute bandwidth
    double sigma_fraction = 0.01; // relative rule otherwise
    std::size_t batch_size = 256;
};

struct LandscapeConfig {
    double half_width = 1.0;
    std::size_t resolution = 51;
    bool log_scale = true;
    std::size_t lanczos_steps = 40;
    std::size_t batch_size = 256;
};

struct ExperimentConfig {
    std::string name = "run";
    DatasetConfig dataset;
    GanArchitecture arch;
    TrainConfig train;
    std::size_t epochs = 10;
    std::size_t checkpoint_stride = 1;  // epochs between checkpoints
    MeasureConfig measure;
    SpectrumConfig spectrum;
    LandscapeConfig landscape;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> compare_seeds{1, 2, 3, 4, 5};
    std::filesystem::path out_dir = "runs/run";

    static ExperimentConfig from_kv(const KeyValueConfig& kv);
    static ExperimentConfig load(const std::filesystem::path& path);
    void validate() const;
    /// Every key with its effective value, in a fixed order; parses back to
    /// the same config.
    std::string resolved() const;
};

std::string_view dataset_kind_name(DatasetConfig::Kind kind);

}  // namespace hessgan
