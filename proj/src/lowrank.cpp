#include "lrgemm/lowrank.hpp"

#include <algorithm>
#include <chrono>

#include "lrgemm/error.hpp"

namespace lrgemm {

DenseMatrix lowrank_multiply(const SvdFactors& fa, const SvdFactors& fb, unsigned threads) {
  if (fa.vt.cols() != fb.u.rows()) {
    throw DimensionError("lowrank_multiply: inner dimensions differ (A factors " +
                         fa.u.shape_string() + " * " + fa.vt.shape_string() + ", B factors " +
                         fb.u.shape_string() + " * " + fb.vt.shape_string() + ")");
  }
  if (fa.s.size() != fa.vt.rows() || fb.s.size() != fb.u.cols()) {
    throw DimensionError("lowrank_multiply: singular value count disagrees with factor shapes");
  }
  DenseMatrix core = matmul_reference(fa.vt, fb.u);
  for (std::size_t i = 0; i < core.rows(); ++i)
    for (std::size_t j = 0; j < core.cols(); ++j) core(i, j) = (fa.s[i] * core(i, j)) * fb.s[j];
  const DenseMatrix left = matmul_reference(fa.u, core, threads);
  return matmul_reference(left, fb.vt, threads);
}

std::string_view to_string(FactorPrecision p) {
  return p == FactorPrecision::fp64 ? "fp64" : "fp8_factors";
}

FactorPrecision parse_factor_precision(std::string_view text) {
  if (text == "fp64") return FactorPrecision::fp64;
  if (text == "fp8_factors" || text == "fp8") return FactorPrecision::fp8_factors;
  throw InvalidArgument("unknown factor precision '" + std::string(text) + "'");
}

SvdFactors quantize_factors(const SvdFactors& f, const Fp8Format& format) {
  return SvdFactors{dequantize(quantize(f.u, format)), f.s, dequantize(quantize(f.vt, format))};
}

LowrankResult lowrank_gemm(const DenseMatrix& a, const DenseMatrix& b, const RankPolicy& policy,
                           const LowrankOptions& options) {
  if (a.cols() != b.rows()) {
    throw DimensionError("lowrank_gemm: cannot multiply " + a.shape_string() + " by " +
                         b.shape_string());
  }
  const auto start = std::chrono::steady_clock::now();
  // B's sketch uses the next seed so the two operands never share a draw.
  const SvdFactors fa = decompose(a, policy, options.method, options.seed);
  const SvdFactors fb = decompose(b, policy, options.method, options.seed + 1);

  DenseMatrix product = [&] {
    if (options.precision == FactorPrecision::fp8_factors) {
      return lowrank_multiply(quantize_factors(fa, options.format),
                              quantize_factors(fb, options.format), options.threads);
    }
    return lowrank_multiply(fa, fb, options.threads);
  }();
  const auto stop = std::chrono::steady_clock::now();

  GemmStats stats;
  stats.rank_a = fa.rank();
  stats.rank_b = fb.rank();
  stats.flops_lowrank = lowrank_flops(a.rows(), a.cols(), b.cols(), fa.rank(), fb.rank());
  stats.flops_dense_equivalent =
      2ull * static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols();
  stats.wall_time_seconds = std::chrono::duration<double>(stop - start).count();
  if (options.precision == FactorPrecision::fp8_factors && options.diagnostics) {
    stats.rel_error_vs_reconstruction =
        relative_error(product, lowrank_multiply(fa, fb, options.threads));
  }
  return {std::move(product), stats};
}

std::uint64_t lowrank_flops(std::uint64_t m, std::uint64_t k, std::uint64_t n, std::uint64_t ra,
                            std::uint64_t rb) {
  return 2 * ra * rb * k + 2 * ra * rb + 2 * m * ra * rb + 2 * m * rb * n;
}

std::uint64_t lowrank_break_even_rank(std::uint64_t m, std::uint64_t k, std::uint64_t n) {
  const std::uint64_t dense = 2 * m * k * n;
  std::uint64_t lo = 0, hi = std::min({m, k, n});
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo + 1) / 2;
    if (lowrank_flops(m, k, n, mid, mid) < dense) lo = mid;
    else hi = mid - 1;
  }
  return lo;
}

}  // namespace lrgemm
