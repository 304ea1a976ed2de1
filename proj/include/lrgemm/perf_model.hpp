#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lrgemm/hardware.hpp"
#include "lrgemm/selector.hpp"

namespace lrgemm {

// 2 n^3.
std::uint64_t gemm_flops(std::uint64_t n);

// 3 n^2 * bytes_per_element: read A and B, write C.
std::uint64_t gemm_traffic_bytes(std::uint64_t n, std::uint64_t bytes_per_element);

// Ceiling on GEMM FLOP/s when every operand element moves once and each
// element carries 2/3 of a FLOP: bandwidth * (2/3) / bytes_per_element.
double bandwidth_limited_flops(double bandwidth_bytes_per_s, std::uint64_t bytes_per_element);

double fraction_of_peak(double measured_flops, double peak_flops);

// Scales a measured rate by the bandwidth ratio target / base.
double extrapolate_throughput(double measured_flops, double base_bandwidth,
                              double target_bandwidth);

struct MemoryReport {
  KernelKind method = KernelKind::direct_fp32;
  std::uint64_t n = 0;
  std::optional<std::uint64_t> rank;
  std::uint64_t elements_per_matrix = 0;
  std::uint64_t bytes_per_matrix = 0;
  std::uint64_t total_bytes = 0;  // 3 * bytes_per_matrix (A, B, C)
  double expansion_factor_vs_direct = 1.0;
};

struct MemoryOptions {
  // Element width of the direct comparison; 0 means "same as the method".
  std::uint64_t direct_bytes_per_element = 0;
  // Multiplies the per-matrix footprint to account for workspace buffers.
  double workspace_multiplier = 1.0;
};

// Direct: n^2 elements per matrix. Lowrank: n*r + r + r*n elements per matrix.
// expansion_factor_vs_direct = direct total / this method's total.
MemoryReport memory_report(KernelKind method, std::uint64_t n, std::optional<std::uint64_t> rank,
                           std::uint64_t bytes_per_element, const MemoryOptions& options = {});

// Largest n whose three-matrix footprint fits in `capacity_bytes`. For lowrank
// kinds the rank is max(1, round(rank_fraction * n)).
std::uint64_t capacity_bound_n(KernelKind method, std::uint64_t capacity_bytes,
                               std::uint64_t bytes_per_element, double rank_fraction = 0.025,
                               const MemoryOptions& options = {});

// Frozen normalization of the sqrt(n / r) error model, calibrated on the
// coupled decaying-spectrum suite (rho = 0.9) at n = 128, r = 16.
inline constexpr double kErrorScaleConstant = 0.01214;

// kErrorScaleConstant * sqrt(n / r).
double error_scale_estimate(std::uint64_t n, std::uint64_t r);

// Reference figures the model reproduces.
struct ReferenceMeasurement {
  double measured_flops = 378e12;  // best low-rank rate at N = 20480
  std::uint64_t n = 20480;
  std::uint64_t rank = 512;
};

struct ThroughputReport {
  std::string profile_name;
  double compute_peak_flops = 0.0;
  double bandwidth_limited_flops = 0.0;
  double measured_or_projected_flops = 0.0;
  double fraction_of_compute_peak = 0.0;
  double fraction_of_bandwidth_peak = 0.0;
  std::uint64_t capacity_bound_n = 0;
};

// Projects the reference measurement taken on `base` onto `target` by
// bandwidth ratio. With target == base the measurement is reported as is.
ThroughputReport throughput_report(const HardwareProfile& base, const HardwareProfile& target,
                                   const ReferenceMeasurement& ref = {});

// One line of the derivation printout.
struct ModelLine {
  std::string label;
  double value = 0.0;
  std::string unit;
  std::optional<double> published;  // figure printed in the source, same unit
  std::string note;
};

// Roofline derivation for `base` followed by the projection onto each target.
std::vector<ModelLine> derivation_lines(const HardwareProfile& base,
                                        const std::vector<HardwareProfile>& targets,
                                        const ReferenceMeasurement& ref = {});

std::string render_model_text(const HardwareProfile& base,
                              const std::vector<HardwareProfile>& targets,
                              const ReferenceMeasurement& ref = {});
std::string render_model_csv(const HardwareProfile& base,
                             const std::vector<HardwareProfile>& targets,
                             const ReferenceMeasurement& ref = {});

}  // namespace lrgemm
