#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "lrgemm/hardware.hpp"
#include "lrgemm/svd.hpp"

namespace lrgemm {

enum class KernelKind { direct_fp32, direct_fp16, direct_fp8, lowrank_fp8, lowrank_auto };

inline constexpr std::array<KernelKind, 5> kAllKernelKinds{
    KernelKind::direct_fp32, KernelKind::direct_fp16, KernelKind::direct_fp8,
    KernelKind::lowrank_fp8, KernelKind::lowrank_auto};

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view text);
bool is_lowrank(KernelKind kind);
// Storage precision of the kind's operands (lowrank kinds store FP8 factors).
Precision storage_precision(KernelKind kind);
std::uint64_t bytes_per_element(Precision p);

enum class Bound { compute, bandwidth, overhead };
std::string_view to_string(Bound b);

struct CostEstimate {
  KernelKind kind = KernelKind::direct_fp32;
  std::optional<std::uint64_t> rank;
  std::uint64_t flops = 0;
  std::uint64_t bytes_moved = 0;
  double predicted_time_s = 0.0;  // overhead + max(flops / peak, bytes / bandwidth)
  Bound limited_by = Bound::compute;
};

struct SelectorOptions {
  // Passes over the operand charged for each decomposition: the surcharge is
  // 2 * decomposition_passes * (m + n) * r * k flops.
  double decomposition_passes = 4.0;
  // Rank used by lowrank_fp8; when unset it follows the rank policy.
  std::optional<std::uint64_t> fixed_rank;
  // Geometric decay rho of the modeled spectrum (sigma_j = rho^j) used to turn
  // spectrum-adaptive policies into a rank for a shape.
  double model_spectrum_decay = 0.9;
};

// Cost of running `kind` on an m x k by k x n product. `rank` is required
// exactly for lowrank kinds.
CostEstimate estimate_cost(KernelKind kind, std::uint64_t m, std::uint64_t k, std::uint64_t n,
                           std::optional<std::uint64_t> rank, const HardwareProfile& profile,
                           const SelectorOptions& options = {});

// Rank a policy implies for a shape: shape-determined policies directly,
// adaptive ones through the modeled geometric spectrum.
std::uint64_t model_rank(const RankPolicy& policy, std::uint64_t m, std::uint64_t n,
                         const SelectorOptions& options = {});

struct KernelConfig {
  KernelKind kind = KernelKind::direct_fp32;
  std::optional<std::uint64_t> rank;
  CostEstimate cost;
  // Every kind that survived the error-budget filter, in enum order.
  std::vector<CostEstimate> candidates;
};

inline const RankPolicy kDefaultRankPolicy = EnergyThreshold{0.99};

// Minimizer of predicted_time_s over all kinds. With an error budget, lowrank
// kinds whose modeled error (error_scale_estimate(min(m, n), r)) exceeds it
// are dropped. Ties resolve to the earliest kind in enum order, so direct
// kinds win ties against lowrank ones.
KernelConfig select_kernel(std::uint64_t m, std::uint64_t k, std::uint64_t n,
                           const HardwareProfile& profile,
                           const RankPolicy& rank_policy = kDefaultRankPolicy,
                           std::optional<double> error_budget = std::nullopt,
                           const SelectorOptions& options = {});

}  // namespace lrgemm
