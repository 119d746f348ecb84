#pragma once

// Data-parallel inner loops shared by the estimators. Each kernel has a scalar
// reference implementation and, where the build target allows, vector variants.
// The public entry points dispatch once per process to the widest instruction
// set the CPU supports; NDSID_ISA=scalar in the environment forces the reference
// path.

#include <cstddef>
#include <span>
#include <string_view>

namespace ndsid::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

/// True when the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// Instruction set the dispatching entry points currently use.
Isa active_isa();

/// Override the dispatch choice (tests and benchmarks). Throws if unavailable.
void set_active_isa(Isa isa);

/// sum_i a_i b_i
double dot(std::span<const double> a, std::span<const double> b);

/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// sum_i (a_i - b_i)^2
double sum_sq_diff(std::span<const double> a, std::span<const double> b);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
}  // namespace scalar

namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
}  // namespace avx2

namespace neon {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
}  // namespace neon

}  // namespace ndsid::kernels
