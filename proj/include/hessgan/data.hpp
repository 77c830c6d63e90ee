#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "hessgan/tensor.hpp"

namespace hessgan {

/// Gaussian mixture with a shared isotropic standard deviation.
struct MixtureSpec {
    std::vector<std::vector<double>> centers;
    double std = 0.0;
    std::vector<double> weights;

    std::size_t dim() const { return centers.empty() ? 0 : centers.front().size(); }
    /// `min_centers` is 2 for rings and 1 for grids.
    void validate(std::size_t min_centers = 2) const;
};

struct Dataset {
    Matrix samples;                      // n x d_x
    std::vector<std::uint32_t> labels;   // optional, one per sample
    std::vector<std::uint32_t> idx_dims; // original IDX dimensions (image data only)

    std::size_t size() const noexcept { return samples.rows(); }
    std::size_t dim() const noexcept { return samples.cols(); }
};

struct MixtureData {
    Dataset dataset;
    MixtureSpec spec;
};

/// Draws `n` samples from a mixture: pick a center by weight, then add N(0, std² I).
Dataset sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed);

/// n_modes centers equally spaced on a circle; mode 0 sits at (radius, 0).
MixtureData gaussian_ring(std::size_t n_modes, double radius, double std, std::size_t n,
                          std::uint64_t seed);

/// side² centers on a square lattice centered at the origin.
MixtureData gaussian_grid(std::size_t side, double spacing, double std, std::size_t n,
                          std::uint64_t seed);

/// batch x d_z matrix of i.i.d. standard normal draws.
Batch sample_latent(std::size_t batch, std::size_t d_z, std::uint64_t seed);

/// Parses an unsigned-byte IDX file (magic 0x00 0x00 0x08 ndim, big-endian
/// uint32 dims, raw data). The first dimension indexes samples; the rest are
/// flattened row-major and scaled to [-1, 1] by x/127.5 - 1.
Dataset load_idx(const std::filesystem::path& path);
Dataset parse_idx(const std::vector<std::uint8_t>& bytes);

/// Inverse of parse_idx for datasets loaded from IDX.
std::vector<std::uint8_t> encode_idx(const Dataset& dataset);

/// One sample per row, label (if any) in the last column.
void write_dataset_csv(const Dataset& dataset, std::ostream& out);

}  // namespace hessgan
