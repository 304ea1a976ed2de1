#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "lrgemm/fp8.hpp"
#include "lrgemm/matrix.hpp"
#include "lrgemm/svd.hpp"

namespace lrgemm {

struct GemmStats {
  std::size_t rank_a = 0;
  std::size_t rank_b = 0;
  std::uint64_t flops_lowrank = 0;
  std::uint64_t flops_dense_equivalent = 0;  // 2 * m * k * n
  // Relative error of the returned product against the same pipeline run on
  // unquantized 64-bit factors (0 for the fp64 path).
  double rel_error_vs_reconstruction = 0.0;
  double wall_time_seconds = 0.0;
};

// A B from factors of A (m x k) and B (k x n), associated as
//   M = fa.vt * fb.u            (ra x rb)
//   core = diag(fa.s) M diag(fb.s)
//   C = (fa.u * core) * fb.vt
DenseMatrix lowrank_multiply(const SvdFactors& fa, const SvdFactors& fb, unsigned threads = 1);

enum class FactorPrecision { fp64, fp8_factors };

std::string_view to_string(FactorPrecision p);
FactorPrecision parse_factor_precision(std::string_view text);

struct LowrankOptions {
  SvdMethod method = SvdMethod::exact;
  FactorPrecision precision = FactorPrecision::fp64;
  Fp8Format format = e4m3();
  std::uint64_t seed = 0;  // A is decomposed with seed, B with seed + 1
  unsigned threads = 1;
  // Compute GemmStats::rel_error_vs_reconstruction (one extra factor product).
  bool diagnostics = true;
};

struct LowrankResult {
  DenseMatrix product;
  GemmStats stats;
};

// u and vt round-tripped through FP8 (one scale each); s stays 64-bit.
// The result is not orthonormal to 1e-8, so it does not pass validate().
SvdFactors quantize_factors(const SvdFactors& f, const Fp8Format& format = e4m3());

// Decomposes both operands with the same policy, optionally passes the u/vt
// factors through FP8, multiplies with lowrank_multiply and fills GemmStats.
LowrankResult lowrank_gemm(const DenseMatrix& a, const DenseMatrix& b, const RankPolicy& policy,
                           const LowrankOptions& options = {});

// Multiply-add count of lowrank_multiply, term by term:
//   2*ra*rb*k   fa.vt * fb.u
//   2*ra*rb     row and column scaling by the singular values
//   2*m*ra*rb   fa.u * core
//   2*m*rb*n    (fa.u * core) * fb.vt
std::uint64_t lowrank_flops(std::uint64_t m, std::uint64_t k, std::uint64_t n, std::uint64_t ra,
                            std::uint64_t rb);

// Largest r with lowrank_flops(m, k, n, r, r) < 2 m k n (0 if none).
std::uint64_t lowrank_break_even_rank(std::uint64_t m, std::uint64_t k, std::uint64_t n);

}  // namespace lrgemm
