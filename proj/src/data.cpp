#include "hessgan/data.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include <fmt/format.h>

#include "hessgan/errors.hpp"

namespace hessgan {

void MixtureSpec::validate(std::size_t min_centers) const {
    if (centers.size() < min_centers) {
        throw ArgumentError("mixture needs at least " + std::to_string(min_centers) + " centers");
    }
    if (!(std >= 0.0)) throw ArgumentError("mixture std must be non-negative");
    if (weights.size() != centers.size()) throw ArgumentError("mixture weights do not match centers");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ArgumentError("mixture weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("mixture weights must sum to 1");
    for (const auto& c : centers) {
        if (c.size() != dim()) throw ArgumentError("mixture centers differ in dimension");
    }
}

Dataset sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ArgumentError("sample_mixture: n must be positive");
    spec.validate(1);
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::uint32_t> pick(spec.weights.begin(), spec.weights.end());
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset ds;
    ds.samples = Matrix(n, spec.dim());
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t c = pick(rng);
        ds.labels[i] = c;
        auto row = ds.samples.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = spec.centers[c][j] + spec.std * noise(rng);
    }
    return ds;
}

MixtureData gaussian_ring(std::size_t n_modes, double radius, double std, std::size_t n,
                          std::uint64_t seed) {
    if (n_modes < 2) throw ArgumentError("gaussian_ring: need at least 2 modes");
    if (!(radius > 0.0)) throw ArgumentError("gaussian_ring: radius must be positive");
    if (!(std >= 0.0)) throw ArgumentError("gaussian_ring: std must be non-negative");
    MixtureSpec spec;
    spec.std = std;
    for (std::size_t k = 0; k < n_modes; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_modes);
        spec.centers.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    }
    spec.weights.assign(n_modes, 1.0 / static_cast<double>(n_modes));
    spec.validate(2);
    return {sample_mixture(spec, n, seed), spec};
}

MixtureData gaussian_grid(std::size_t side, double spacing, double std, std::size_t n,
                          std::uint64_t seed) {
    if (side < 1) throw ArgumentError("gaussian_grid: side must be >= 1");
    if (!(spacing > 0.0)) throw ArgumentError("gaussian_grid: spacing must be positive");
    if (!(std >= 0.0)) throw ArgumentError("gaussian_grid: std must be non-negative");
    MixtureSpec spec;
    spec.std = std;
    const double offset = 0.5 * spacing * static_cast<double>(side - 1);
    for (std::size_t i = 0; i < side; ++i) {
        for (std::size_t j = 0; j < side; ++j) {
            spec.centers.push_back({spacing * static_cast<double>(i) - offset,
                                    spacing * static_cast<double>(j) - offset});
        }
    }
    spec.weights.assign(side * side, 1.0 / static_cast<double>(side * side));
    spec.validate(1);
    return {sample_mixture(spec, n, seed), spec};
}

Batch sample_latent(std::size_t batch, std::size_t d_z, std::uint64_t seed) {
    if (batch == 0 || d_z == 0) throw ArgumentError("sample_latent: batch and d_z must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Batch z(batch, d_z);
    for (auto& x : z.data()) x = normal(rng);
    return z;
}

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
           (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

Dataset parse_idx(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4) throw ParseError("idx: truncated magic number", bytes.size());
    if (bytes[0] != 0 || bytes[1] != 0) throw ParseError("idx: magic must start with two zero bytes", 0);
    if (bytes[2] != 0x08) {
        throw ParseError(fmt::format("idx: unsupported data type 0x{:02x} (only unsigned byte)", bytes[2]), 2);
    }
    const std::size_t ndim = bytes[3];
    if (ndim == 0) throw ParseError("idx: zero dimensions", 3);
    const std::size_t header = 4 + 4 * ndim;
    if (bytes.size() < header) throw ParseError("idx: truncated dimension table", bytes.size());

    Dataset ds;
    std::size_t count = 1;
    for (std::size_t d = 0; d < ndim; ++d) {
        const std::uint32_t v = read_be32(bytes, 4 + 4 * d);
        if (v == 0) throw ParseError("idx: zero-sized dimension", 4 + 4 * d);
        ds.idx_dims.push_back(v);
        count *= v;
    }
    if (bytes.size() - header != count) {
        throw ParseError(fmt::format("idx: dimensions need {} data bytes, file has {}", count,
                                     bytes.size() - header),
                         std::min(bytes.size(), header + count));
    }
    const std::size_t n = ds.idx_dims[0];
    const std::size_t width = count / n;
    ds.samples = Matrix(n, width);
    for (std::size_t i = 0; i < count; ++i) {
        ds.samples.data()[i] = static_cast<double>(bytes[header + i]) / 127.5 - 1.0;
    }
    return ds;
}

Dataset load_idx(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open IDX file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_idx(bytes);
}

std::vector<std::uint8_t> encode_idx(const Dataset& dataset) {
    if (dataset.idx_dims.empty()) throw ArgumentError("encode_idx: dataset has no IDX dimensions");
    std::vector<std::uint8_t> out{0, 0, 0x08, static_cast<std::uint8_t>(dataset.idx_dims.size())};
    for (std::uint32_t d : dataset.idx_dims) {
        for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(d >> shift));
    }
    for (double x : dataset.samples.data()) {
        const double v = std::round((x + 1.0) * 127.5);
        if (!(v >= 0.0 && v <= 255.0)) throw ArgumentError("encode_idx: value outside the byte range");
        out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

void write_dataset_csv(const Dataset& dataset, std::ostream& out) {
    const bool labelled = dataset.labels.size() == dataset.size();
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto row = dataset.samples.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << fmt::format("{}", row[j]);
        if (labelled) out << ',' << dataset.labels[i];
        out << '\n';
    }
}

}  // namespace hessgan
