#include "lrgemm/selector.hpp"

#include <algorithm>
#include <cmath>

#include "lrgemm/error.hpp"
#include "lrgemm/lowrank.hpp"
#include "lrgemm/perf_model.hpp"

namespace lrgemm {

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::direct_fp32: return "direct_fp32";
    case KernelKind::direct_fp16: return "direct_fp16";
    case KernelKind::direct_fp8: return "direct_fp8";
    case KernelKind::lowrank_fp8: return "lowrank_fp8";
    case KernelKind::lowrank_auto: return "lowrank_auto";
  }
  return "?";
}

KernelKind parse_kernel_kind(std::string_view text) {
  for (KernelKind k : kAllKernelKinds) {
    if (to_string(k) == text) return k;
  }
  throw InvalidArgument("unknown kernel kind '" + std::string(text) + "'");
}

bool is_lowrank(KernelKind kind) {
  return kind == KernelKind::lowrank_fp8 || kind == KernelKind::lowrank_auto;
}

Precision storage_precision(KernelKind kind) {
  switch (kind) {
    case KernelKind::direct_fp32: return Precision::fp32;
    case KernelKind::direct_fp16: return Precision::fp16;
    default: return Precision::fp8;
  }
}

std::uint64_t bytes_per_element(Precision p) {
  switch (p) {
    case Precision::fp64: return 8;
    case Precision::fp32: return 4;
    case Precision::fp16: return 2;
    case Precision::fp8: return 1;
  }
  return 8;
}

std::string_view to_string(Bound b) {
  switch (b) {
    case Bound::compute: return "compute";
    case Bound::bandwidth: return "bandwidth";
    case Bound::overhead: return "overhead";
  }
  return "?";
}

CostEstimate estimate_cost(KernelKind kind, std::uint64_t m, std::uint64_t k, std::uint64_t n,
                           std::optional<std::uint64_t> rank, const HardwareProfile& profile,
                           const SelectorOptions& options) {
  if (m == 0 || k == 0 || n == 0) throw InvalidArgument("estimate_cost: dimensions must be positive");
  if (is_lowrank(kind) && !rank) {
    throw InvalidArgument("estimate_cost: " + std::string(to_string(kind)) + " needs a rank");
  }
  if (!is_lowrank(kind) && rank) {
    throw InvalidArgument("estimate_cost: " + std::string(to_string(kind)) + " takes no rank");
  }
  if (rank && *rank == 0) throw InvalidArgument("estimate_cost: rank must be positive");

  const Precision precision = storage_precision(kind);
  const std::uint64_t bpe = bytes_per_element(precision);
  CostEstimate est;
  est.kind = kind;
  est.rank = rank;
  double overhead;
  if (is_lowrank(kind)) {
    const std::uint64_t r = *rank;
    const auto surcharge = static_cast<std::uint64_t>(
        std::llround(2.0 * options.decomposition_passes * static_cast<double>(m + n) *
                     static_cast<double>(r) * static_cast<double>(k)));
    est.flops = lowrank_flops(m, k, n, r, r) + surcharge;
    est.bytes_moved = (m * r + r + r * n) * 2 * bpe + m * n * bpe;
    overhead = profile.launch_overhead_s_lowrank;
  } else {
    est.flops = 2 * m * k * n;
    est.bytes_moved = (m * k + k * n + m * n) * bpe;
    overhead = profile.launch_overhead_s_direct;
  }
  const double compute_t = static_cast<double>(est.flops) / profile.peak_flops(precision);
  const double bandwidth_t = static_cast<double>(est.bytes_moved) / profile.mem_bandwidth_bytes_per_s;
  const double work_t = std::max(compute_t, bandwidth_t);
  est.predicted_time_s = overhead + work_t;
  if (overhead > work_t) est.limited_by = Bound::overhead;
  else est.limited_by = compute_t >= bandwidth_t ? Bound::compute : Bound::bandwidth;
  return est;
}

std::uint64_t model_rank(const RankPolicy& policy, std::uint64_t m, std::uint64_t n,
                         const SelectorOptions& options) {
  if (auto r = shape_rank(policy, m, n)) return *r;
  const double rho = options.model_spectrum_decay;
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("model_spectrum_decay must be in (0, 1]");
  // Values past the relative zero threshold do not change the selected rank.
  std::vector<double> spectrum;
  const std::uint64_t full = std::min(m, n);
  for (std::uint64_t j = 0; j < full; ++j) {
    const double s = std::pow(rho, static_cast<double>(j));
    if (s < kRelativeZeroThreshold) break;
    spectrum.push_back(s);
  }
  return select_rank(spectrum, policy, m, n);
}

KernelConfig select_kernel(std::uint64_t m, std::uint64_t k, std::uint64_t n,
                           const HardwareProfile& profile, const RankPolicy& rank_policy,
                           std::optional<double> error_budget, const SelectorOptions& options) {
  validate(profile);
  KernelConfig config;
  const std::uint64_t full = std::min(m, n);
  for (KernelKind kind : kAllKernelKinds) {
    std::optional<std::uint64_t> rank;
    if (is_lowrank(kind)) {
      rank = (kind == KernelKind::lowrank_fp8 && options.fixed_rank)
                 ? std::min(*options.fixed_rank, full)
                 : model_rank(rank_policy, m, n, options);
      if (error_budget && error_scale_estimate(full, *rank) > *error_budget) continue;
    }
    config.candidates.push_back(estimate_cost(kind, m, k, n, rank, profile, options));
  }
  const auto best = std::min_element(
      config.candidates.begin(), config.candidates.end(),
      [](const CostEstimate& a, const CostEstimate& b) { return a.predicted_time_s < b.predicted_time_s; });
  config.kind = best->kind;
  config.rank = best->rank;
  config.cost = *best;
  return config;
}

}  // namespace lrgemm
