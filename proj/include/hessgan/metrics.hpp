#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "hessgan/data.hpp"
#include "hessgan/spectral.hpp"
#include "hessgan/tensor.hpp"

namespace hessgan {

struct ModeCoverage {
    std::size_t covered_modes = 0;
    std::size_t total_modes = 0;
    double high_quality_fraction = 0.0;
    std::vector<std::size_t> per_mode_counts;  // nearest-center assignment counts

    double score() const {
        return total_modes ? static_cast<double>(covered_modes) / static_cast<double>(total_modes) : 0.0;
    }
};

/// Assigns every sample to its nearest center. A mode is covered when at least
/// max(20, 0.1 n / modes) samples lie within threshold_sigmas * std of it.
ModeCoverage mode_coverage(const Matrix& samples, const MixtureSpec& spec, double threshold_sigmas = 3.0);

/// Sample Pearson correlation. Throws ArgumentError on zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct SpectralSummary {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double negative_mass = 0.0;
    double spread = 0.0;
};

/// Extremes of the support (density > 1e-6 · peak) and the mass below zero.
SpectralSummary spectral_summary(const SpectralDensity& density);

struct EigenTrace {
    std::vector<std::uint64_t> epochs;
    std::vector<double> lambda_max_g;
    std::vector<double> lambda_max_d;
    std::vector<double> score;

    std::size_t size() const noexcept { return epochs.size(); }
    void append(std::uint64_t epoch, double lambda_g, double lambda_d, double score_value);
    void validate() const;
};

double trace_correlation(const EigenTrace& trace);

void write_eigen_trace_csv(const EigenTrace& trace, std::ostream& out);

}  // namespace hessgan
