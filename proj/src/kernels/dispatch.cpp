#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ndsid/errors.hpp"
#include "ndsid/kernels.hpp"

namespace ndsid::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(NDSID_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool compiled_neon() {
#if defined(__aarch64__) || defined(_M_ARM64)
    return true;
#else
    return false;
#endif
}

Isa detect() {
    if (const char* forced = std::getenv("NDSID_ISA")) {
        const std::string v(forced);
        if (v == "scalar") return Isa::Scalar;
        if (v == "avx2" && cpu_has_avx2()) return Isa::Avx2;
        if (v == "neon" && compiled_neon()) return Isa::Neon;
    }
    if (cpu_has_avx2()) return Isa::Avx2;
    if (compiled_neon()) return Isa::Neon;
    return Isa::Scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2: return cpu_has_avx2();
        case Isa::Neon: return compiled_neon();
    }
    return false;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (!isa_available(isa))
        throw Error("kernels: instruction set " + std::string(isa_name(isa)) + " is not available");
    current().store(isa, std::memory_order_relaxed);
}

#define NDSID_DISPATCH(call)                                                   \
    switch (active_isa()) {                                                    \
        case Isa::Avx2: NDSID_AVX2_CALL(call);                                  \
        case Isa::Neon: NDSID_NEON_CALL(call);                                  \
        default: return scalar::call;                                          \
    }

#if defined(NDSID_HAVE_AVX2)
#define NDSID_AVX2_CALL(call) return avx2::call
#else
#define NDSID_AVX2_CALL(call) return scalar::call
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
#define NDSID_NEON_CALL(call) return neon::call
#else
#define NDSID_NEON_CALL(call) return scalar::call
#endif

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("kernels::dot: length mismatch");
    NDSID_DISPATCH(dot(a, b))
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw DimensionError("kernels::axpy: length mismatch");
    NDSID_DISPATCH(axpy(alpha, x, y))
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("kernels::sum_sq_diff: length mismatch");
    NDSID_DISPATCH(sum_sq_diff(a, b))
}

}  // namespace ndsid::kernels
