#pragma once

// Data-parallel double-precision kernels used by the MLP engine and the
// Lanczos iteration. Each kernel has a scalar reference implementation and
// SIMD variants (AVX2+FMA on x86-64, NEON on AArch64); the fastest variant the
// running CPU supports is picked on first use. Setting the environment
// variable HESSGAN_KERNELS=scalar forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace hessgan::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // x *= a
    void (*scale)(double a, double* x, std::size_t n);
    double (*sum_squares)(const double* x, std::size_t n);
};

const KernelTable& scalar_table();
const KernelTable& table(Backend backend);

bool backend_supported(Backend backend);
Backend active_backend();
/// Throws ArgumentError when the CPU (or the build) lacks the backend.
void set_backend(Backend backend);
std::string_view backend_name(Backend backend);

const KernelTable& active();

inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), x.size());
}

inline void scale(double a, std::span<double> x) { active().scale(a, x.data(), x.size()); }

inline double sum_squares(std::span<const double> x) {
    return active().sum_squares(x.data(), x.size());
}

double norm2(std::span<const double> x);

}  // namespace hessgan::kernels
