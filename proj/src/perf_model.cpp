#include "lrgemm/perf_model.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "lrgemm/config.hpp"
#include "lrgemm/error.hpp"

namespace lrgemm {

namespace {

// Figures printed alongside the projection; keyed by profile name.
struct PublishedProjection {
  double pflops;
  std::string_view max_n;
};

const std::map<std::string, PublishedProjection, std::less<>>& published_projections() {
  static const std::map<std::string, PublishedProjection, std::less<>> table{
      {"h200", {1.81, ">35,000"}},
      {"b200", {3.02, ">50,000"}},
  };
  return table;
}

constexpr double kPublishedFp8PeakTflops = 1321.0;
constexpr double kPublishedComputeFraction = 28.6;
constexpr double kPublishedBandwidthCeilingTflops = 667.0;
constexpr double kPublishedBandwidthFraction = 56.7;
constexpr double kPublishedFactorElements = 20990976.0;
constexpr double kPublishedExpansion = 3.25;

// Workspace multiplier that turns n^2 * 4 B = 1.68 GB into the "5 GB per
// matrix" quoted for N = 20480 in FP32.
constexpr double kReportWorkspaceMultiplier = 3.0;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string show(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return fmt("%.0f", v);
  return fmt("%.6g", v);
}

}  // namespace

std::uint64_t gemm_flops(std::uint64_t n) { return 2 * n * n * n; }

std::uint64_t gemm_traffic_bytes(std::uint64_t n, std::uint64_t bytes_per_element) {
  return 3 * n * n * bytes_per_element;
}

double bandwidth_limited_flops(double bandwidth_bytes_per_s, std::uint64_t bytes_per_element) {
  if (!(bandwidth_bytes_per_s > 0.0) || bytes_per_element == 0) {
    throw InvalidArgument("bandwidth_limited_flops: bandwidth and element width must be positive");
  }
  return bandwidth_bytes_per_s * (2.0 / 3.0) / static_cast<double>(bytes_per_element);
}

double fraction_of_peak(double measured_flops, double peak_flops) {
  if (!(peak_flops > 0.0)) throw InvalidArgument("fraction_of_peak: peak must be positive");
  return measured_flops / peak_flops;
}

double extrapolate_throughput(double measured_flops, double base_bandwidth,
                              double target_bandwidth) {
  if (!(base_bandwidth > 0.0) || !(target_bandwidth > 0.0)) {
    throw InvalidArgument("extrapolate_throughput: bandwidths must be positive");
  }
  return measured_flops * (target_bandwidth / base_bandwidth);
}

MemoryReport memory_report(KernelKind method, std::uint64_t n, std::optional<std::uint64_t> rank,
                           std::uint64_t bytes_per_element, const MemoryOptions& options) {
  if (n == 0 || bytes_per_element == 0) {
    throw InvalidArgument("memory_report: n and bytes_per_element must be positive");
  }
  if (is_lowrank(method) && (!rank || *rank == 0)) {
    throw InvalidArgument("memory_report: " + std::string(to_string(method)) + " needs a positive rank");
  }
  if (!(options.workspace_multiplier >= 1.0)) {
    throw InvalidArgument("memory_report: workspace_multiplier must be >= 1");
  }
  const auto bytes_for = [&](std::uint64_t elements, std::uint64_t bpe) {
    const std::uint64_t raw = elements * bpe;
    if (options.workspace_multiplier == 1.0) return raw;
    return static_cast<std::uint64_t>(std::llround(static_cast<double>(raw) * options.workspace_multiplier));
  };

  MemoryReport report;
  report.method = method;
  report.n = n;
  report.rank = is_lowrank(method) ? rank : std::nullopt;
  report.elements_per_matrix = is_lowrank(method) ? n * *rank + *rank + *rank * n : n * n;
  report.bytes_per_matrix = bytes_for(report.elements_per_matrix, bytes_per_element);
  report.total_bytes = 3 * report.bytes_per_matrix;
  const std::uint64_t direct_bpe =
      options.direct_bytes_per_element ? options.direct_bytes_per_element : bytes_per_element;
  const std::uint64_t direct_total = 3 * bytes_for(n * n, direct_bpe);
  report.expansion_factor_vs_direct =
      static_cast<double>(direct_total) / static_cast<double>(report.total_bytes);
  return report;
}

std::uint64_t capacity_bound_n(KernelKind method, std::uint64_t capacity_bytes,
                               std::uint64_t bytes_per_element, double rank_fraction,
                               const MemoryOptions& options) {
  if (is_lowrank(method) && !(rank_fraction > 0.0 && rank_fraction <= 1.0)) {
    throw InvalidArgument("capacity_bound_n: rank_fraction must be in (0, 1]");
  }
  const auto fits = [&](std::uint64_t n) {
    std::optional<std::uint64_t> rank;
    if (is_lowrank(method)) {
      rank = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(
                                            std::llround(rank_fraction * static_cast<double>(n))));
    }
    return memory_report(method, n, rank, bytes_per_element, options).total_bytes <= capacity_bytes;
  };
  if (!fits(1)) return 0;
  std::uint64_t lo = 1, hi = 2;
  while (fits(hi)) {
    lo = hi;
    hi *= 2;
    if (hi > (std::uint64_t{1} << 30)) throw InvalidArgument("capacity_bound_n: capacity too large to invert");
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (fits(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

double error_scale_estimate(std::uint64_t n, std::uint64_t r) {
  if (n == 0 || r == 0 || r > n) throw InvalidArgument("error_scale_estimate: need 0 < r <= n");
  return kErrorScaleConstant * std::sqrt(static_cast<double>(n) / static_cast<double>(r));
}

ThroughputReport throughput_report(const HardwareProfile& base, const HardwareProfile& target,
                                   const ReferenceMeasurement& ref) {
  validate(base);
  validate(target);
  ThroughputReport report;
  report.profile_name = target.name;
  report.compute_peak_flops = target.peak_flops_fp8;
  report.bandwidth_limited_flops = bandwidth_limited_flops(target.mem_bandwidth_bytes_per_s, 1);
  report.measured_or_projected_flops = extrapolate_throughput(
      ref.measured_flops, base.mem_bandwidth_bytes_per_s, target.mem_bandwidth_bytes_per_s);
  report.fraction_of_compute_peak =
      fraction_of_peak(report.measured_or_projected_flops, report.compute_peak_flops);
  report.fraction_of_bandwidth_peak =
      fraction_of_peak(report.measured_or_projected_flops, report.bandwidth_limited_flops);
  report.capacity_bound_n =
      capacity_bound_n(KernelKind::direct_fp32, target.memory_capacity_bytes, 4, 0.025,
                       MemoryOptions{0, kReportWorkspaceMultiplier});
  return report;
}

std::vector<ModelLine> derivation_lines(const HardwareProfile& base,
                                        const std::vector<HardwareProfile>& targets,
                                        const ReferenceMeasurement& ref) {
  const ThroughputReport b = throughput_report(base, base, ref);
  const auto n = ref.n;
  std::vector<ModelLine> lines;
  lines.push_back({"fp8 compute peak", b.compute_peak_flops / 1e12, "TFLOPS", kPublishedFp8PeakTflops, ""});
  lines.push_back({"measured lowrank throughput", ref.measured_flops / 1e12, "TFLOPS", 378.0, ""});
  lines.push_back({"fraction of compute peak", 100.0 * b.fraction_of_compute_peak, "%",
                   kPublishedComputeFraction, ""});
  lines.push_back({"gemm flops at N=" + std::to_string(n), static_cast<double>(gemm_flops(n)), "FLOP",
                   std::nullopt, "2 N^3"});
  lines.push_back({"gemm traffic at N=" + std::to_string(n), static_cast<double>(gemm_traffic_bytes(n, 1)),
                   "B", std::nullopt, "3 N^2 at 1 B per element"});
  lines.push_back({"bandwidth-limited ceiling", b.bandwidth_limited_flops / 1e12, "TFLOPS",
                   kPublishedBandwidthCeilingTflops,
                   "bandwidth * 2/3 per byte; published figure is 1000x the formula value"});
  lines.push_back({"fraction of bandwidth ceiling", 100.0 * b.fraction_of_bandwidth_peak, "%",
                   kPublishedBandwidthFraction, "inherits the 1000x ceiling discrepancy"});

  const MemoryReport factored = memory_report(KernelKind::lowrank_auto, n, ref.rank, 1);
  lines.push_back({"factor elements per matrix (r=" + std::to_string(ref.rank) + ")",
                   static_cast<double>(factored.elements_per_matrix), "elements",
                   kPublishedFactorElements, "published count disagrees with n*r + r + r*n"});
  const MemoryReport eighth = memory_report(KernelKind::lowrank_auto, n, n / 8, 1);
  lines.push_back({"expansion factor at r=n/8", eighth.expansion_factor_vs_direct, "x",
                   kPublishedExpansion, "published 3.25x contradicts its own 15 / 3.75 = 4"});

  for (const auto& t : targets) {
    const ThroughputReport r = throughput_report(base, t, ref);
    const auto it = published_projections().find(t.name);
    const bool known = it != published_projections().end();
    lines.push_back({"projected throughput " + t.name, r.measured_or_projected_flops / 1e15, "PFLOPS",
                     known ? std::optional<double>(it->second.pflops) : std::nullopt,
                     "scaled by bandwidth ratio"});
    lines.push_back({"projected fraction of fp8 peak " + t.name, 100.0 * r.fraction_of_compute_peak, "%",
                     std::nullopt, ""});
    lines.push_back({"capacity-bound N " + t.name, static_cast<double>(r.capacity_bound_n), "",
                     std::nullopt,
                     std::string("approximate; direct fp32 with 3x workspace") +
                         (known ? "; published " + std::string(it->second.max_n) : "")});
  }
  return lines;
}

std::string render_model_text(const HardwareProfile& base,
                              const std::vector<HardwareProfile>& targets,
                              const ReferenceMeasurement& ref) {
  std::string out = "Roofline derivation (base profile " + base.name + ")\n";
  for (const auto& l : derivation_lines(base, targets, ref)) {
    std::string row = "  " + l.label + ": " + show(l.value);
    if (!l.unit.empty()) row += " " + l.unit;
    if (l.published) {
      row += "  [published " + show(*l.published);
      const double dev = (l.value - *l.published) / *l.published;
      // Counts must agree exactly; rates and ratios to half a percent.
      const bool matches = l.unit == "elements" ? l.value == *l.published : std::abs(dev) <= 0.005;
      row += matches ? ", matches]" : ", diverges " + fmt("%+.3g", 100.0 * dev) + "%]";
    }
    if (!l.note.empty()) row += "  (" + l.note + ")";
    out += row + "\n";
  }
  out += "\nProjection table\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "  %-10s %10s %12s %14s %8s\n", "profile", "BW TB/s", "FP8 PFLOPS",
                "est. TFLOPS", "max N");
  out += buf;
  std::vector<HardwareProfile> all{base};
  for (const auto& t : targets) {
    if (t.name != base.name) all.push_back(t);
  }
  for (const auto& t : all) {
    const ThroughputReport r = throughput_report(base, t, ref);
    std::snprintf(buf, sizeof buf, "  %-10s %10.3g %12.4g %14.0f %8llu\n", t.name.c_str(),
                  t.mem_bandwidth_bytes_per_s / 1e12, t.peak_flops_fp8 / 1e15,
                  r.measured_or_projected_flops / 1e12,
                  static_cast<unsigned long long>(r.capacity_bound_n));
    out += buf;
  }
  return out;
}

std::string render_model_csv(const HardwareProfile& base,
                             const std::vector<HardwareProfile>& targets,
                             const ReferenceMeasurement& ref) {
  std::string out = "label,value,unit,published,note\n";
  for (const auto& l : derivation_lines(base, targets, ref)) {
    out += l.label + "," + format_real(l.value) + "," + l.unit + "," +
           (l.published ? format_real(*l.published) : "") + ",\"" + l.note + "\"\n";
  }
  return out;
}

}  // namespace lrgemm
