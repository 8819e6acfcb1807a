#pragma once

// Runtime-dispatched data-parallel kernels.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is compiled into a separate translation unit and selected at first
// use when the CPU reports support. The environment variable FTFER_SIMD
// (values: scalar, avx2) overrides detection. Variants are equivalence-tested
// against the scalar reference; they are not bitwise identical (lane-wise
// summation order and fused multiply-add differ), so a single process always
// uses one table for its whole lifetime unless set_level() is called.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace ftfer::simd {

enum class Level { scalar, avx2 };

struct AdamCoefficients {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  Level level;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = max(x, 0); x and y may alias
  void (*relu)(const double* x, double* y, std::size_t n);
  // grad_in = pre > 0 ? grad_out : 0
  void (*relu_backward)(const double* pre, const double* grad_out, double* grad_in, std::size_t n);
  // one bias-corrected Adam update of n parameters in place
  void (*adam)(double* param, double* m, double* v, const double* grad, std::size_t n,
               const AdamCoefficients& c);
};

// Table for the active level.
const KernelTable& kernels();

// Table for a specific level, or nullptr if it is not compiled in or the CPU lacks support.
const KernelTable* table_for(Level level);

Level active_level();

// Throws InvalidArgument if the level is unavailable on this machine.
void set_level(Level level);

Level best_available_level();

std::string_view to_string(Level level);
std::optional<Level> parse_level(std::string_view name);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace ftfer::simd
