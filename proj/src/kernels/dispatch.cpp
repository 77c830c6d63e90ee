#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "hessgan/errors.hpp"
#include "hessgan/kernels.hpp"

namespace hessgan::kernels {

#if defined(HESSGAN_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(HESSGAN_HAVE_NEON)
const KernelTable& neon_table();
#endif

namespace {

bool cpu_has(Backend backend) {
    switch (backend) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
#if defined(HESSGAN_HAVE_AVX2)
            __builtin_cpu_init();
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::neon:
#if defined(HESSGAN_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend pick_default() {
    if (const char* env = std::getenv("HESSGAN_KERNELS"); env && std::string(env) == "scalar") {
        return Backend::scalar;
    }
    if (cpu_has(Backend::avx2)) return Backend::avx2;
    if (cpu_has(Backend::neon)) return Backend::neon;
    return Backend::scalar;
}

std::atomic<const KernelTable*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::scalar};

}  // namespace

const KernelTable& table(Backend backend) {
    if (!cpu_has(backend)) {
        throw ArgumentError("kernel backend '" + std::string(backend_name(backend)) +
                            "' is not available on this CPU/build");
    }
    switch (backend) {
#if defined(HESSGAN_HAVE_AVX2)
        case Backend::avx2:
            return avx2_table();
#endif
#if defined(HESSGAN_HAVE_NEON)
        case Backend::neon:
            return neon_table();
#endif
        default:
            return scalar_table();
    }
}

bool backend_supported(Backend backend) { return cpu_has(backend); }

void set_backend(Backend backend) {
    const KernelTable& t = table(backend);
    g_backend.store(backend);
    g_active.store(&t);
}

Backend active_backend() {
    active();
    return g_backend.load();
}

const KernelTable& active() {
    const KernelTable* t = g_active.load(std::memory_order_acquire);
    if (t == nullptr) {
        Backend b = pick_default();
        t = &table(b);
        g_backend.store(b);
        g_active.store(t, std::memory_order_release);
    }
    return *t;
}

std::string_view backend_name(Backend backend) {
    switch (backend) {
        case Backend::scalar:
            return "scalar";
        case Backend::avx2:
            return "avx2";
        case Backend::neon:
            return "neon";
    }
    return "unknown";
}

double norm2(std::span<const double> x) { return std::sqrt(sum_squares(x)); }

}  // namespace hessgan::kernels
