#include "hessgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "hessgan/errors.hpp"

namespace hessgan {

ModeCoverage mode_coverage(const Matrix& samples, const MixtureSpec& spec, double threshold_sigmas) {
    if (samples.rows() == 0) throw ArgumentError("mode_coverage: no samples");
    if (!(threshold_sigmas > 0.0)) throw ArgumentError("mode_coverage: threshold must be positive");
    if (spec.centers.empty() || samples.cols() != spec.dim()) {
        throw ArgumentError("mode_coverage: samples do not match the mixture dimension");
    }
    const std::size_t modes = spec.centers.size();
    const double radius = threshold_sigmas * spec.std;
    const double radius2 = radius * radius;

    ModeCoverage cov;
    cov.total_modes = modes;
    cov.per_mode_counts.assign(modes, 0);
    std::vector<std::size_t> near(modes, 0);
    std::size_t high_quality = 0;
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        auto x = samples.row(i);
        std::size_t best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < modes; ++c) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double d = x[j] - spec.centers[c][j];
                d2 += d * d;
            }
            if (d2 < best_d2) {
                best_d2 = d2;
                best = c;
            }
        }
        cov.per_mode_counts[best] += 1;
        if (best_d2 <= radius2) {
            near[best] += 1;
            high_quality += 1;
        }
    }
    const double needed = std::max(20.0, 0.1 * static_cast<double>(samples.rows()) / static_cast<double>(modes));
    for (std::size_t c = 0; c < modes; ++c) {
        if (static_cast<double>(near[c]) >= needed) cov.covered_modes += 1;
    }
    cov.high_quality_fraction = static_cast<double>(high_quality) / static_cast<double>(samples.rows());
    return cov;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgumentError("pearson: series differ in length");
    if (x.size() < 2) throw ArgumentError("pearson: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw ArgumentError("pearson: correlation undefined for a constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SpectralSummary spectral_summary(const SpectralDensity& density) {
    if (density.grid.size() < 2 || density.grid.size() != density.density.size()) {
        throw ArgumentError("spectral_summary: malformed density");
    }
    const double peak = *std::max_element(density.density.begin(), density.density.end());
    if (!(peak > 0.0)) throw ArgumentError("spectral_summary: density is identically zero");
    const double cutoff = 1e-6 * peak;
    SpectralSummary s;
    bool found = false;
    for (std::size_t i = 0; i < density.grid.size(); ++i) {
        if (density.density[i] > cutoff) {
            if (!found) s.lambda_min = density.grid[i];
            s.lambda_max = density.grid[i];
            found = true;
        }
    }
    s.spread = s.lambda_max - s.lambda_min;

    // Trapezoid mass over t < 0, splitting the interval that straddles zero.
    double neg = 0.0, total = 0.0;
    for (std::size_t i = 0; i + 1 < density.grid.size(); ++i) {
        const double t0 = density.grid[i], t1 = density.grid[i + 1];
        const double f0 = density.density[i], f1 = density.density[i + 1];
        const double area = 0.5 * (t1 - t0) * (f0 + f1);
        total += area;
        if (t1 <= 0.0) {
            neg += area;
        } else if (t0 < 0.0) {
            const double frac = -t0 / (t1 - t0);
            const double fz = f0 + frac * (f1 - f0);
            neg += 0.5 * (0.0 - t0) * (f0 + fz);
        }
    }
    s.negative_mass = total > 0.0 ? std::clamp(neg / total, 0.0, 1.0) : 0.0;
    return s;
}

void EigenTrace::append(std::uint64_t epoch, double lambda_g, double lambda_d, double score_value) {
    if (!epochs.empty() && epoch <= epochs.back()) {
        throw ArgumentError("eigen trace epochs must be strictly increasing");
    }
    epochs.push_back(epoch);
    lambda_max_g.push_back(lambda_g);
    lambda_max_d.push_back(lambda_d);
    score.push_back(score_value);
}

void EigenTrace::validate() const {
    if (lambda_max_g.size() != epochs.size() || lambda_max_d.size() != epochs.size() ||
        score.size() != epochs.size()) {
        throw ArgumentError("eigen trace columns differ in length");
    }
    for (std::size_t i = 1; i < epochs.size(); ++i) {
        if (epochs[i] <= epochs[i - 1]) throw ArgumentError("eigen trace epochs must be strictly increasing");
    }
}

double trace_correlation(const EigenTrace& trace) {
    trace.validate();
    if (trace.size() < 2) throw ArgumentError("trace_correlation: need at least two rows");
    return pearson(trace.lambda_max_g, trace.lambda_max_d);
}

void write_eigen_trace_csv(const EigenTrace& trace, std::ostream& out) {
    trace.validate();
    out << "epoch,lambda_max_G,lambda_max_D,score\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << fmt::format("{},{},{},{}\n", trace.epochs[i], trace.lambda_max_g[i], trace.lambda_max_d[i],
                           trace.score[i]);
    }
}

}  // namespace hessgan
