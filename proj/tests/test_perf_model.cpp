#include <gtest/gtest.h>

#include <cmath>

#include "lrgemm/error.hpp"
#include "lrgemm/hardware.hpp"
#include "lrgemm/perf_model.hpp"

using namespace lrgemm;

TEST(GemmCounts, Examples) {
  EXPECT_EQ(gemm_flops(1), 2u);
  EXPECT_EQ(gemm_flops(1024), 2147483648u);
  EXPECT_EQ(gemm_flops(20480), 2ull * 20480 * 20480 * 20480);
  EXPECT_EQ(gemm_traffic_bytes(1, 1), 3u);
  EXPECT_EQ(gemm_traffic_bytes(20480, 1), 3u * 20480 * 20480);
  EXPECT_EQ(gemm_traffic_bytes(20480, 4), 4 * gemm_traffic_bytes(20480, 1));
}

TEST(BandwidthLimitedFlops, FormulaValues) {
  // bandwidth * 2/3 FLOP per byte: 1e12 B/s carries 6.667e11 FLOP/s.
  EXPECT_NEAR(bandwidth_limited_flops(1e12, 1), 2e12 / 3, 1e-3);
  EXPECT_NEAR(bandwidth_limited_flops(4.8e12, 1), 3.2e12, 1e-2);
  EXPECT_EQ(bandwidth_limited_flops(1e12, 2), bandwidth_limited_flops(1e12, 1) / 2);
  EXPECT_THROW(bandwidth_limited_flops(0.0, 1), InvalidArgument);
}

TEST(BandwidthLimitedFlops, FlopsPerByteLimitIsTwoThirdsN) {
  // Direct FP8 GEMM: 2 N^3 / 3 N^2 = 2N/3 FLOP per byte.
  for (std::uint64_t n : {1024u, 20480u}) {
    EXPECT_DOUBLE_EQ(static_cast<double>(gemm_flops(n)) / static_cast<double>(gemm_traffic_bytes(n, 1)),
                     2.0 * static_cast<double>(n) / 3.0);
  }
}

TEST(FractionOfPeak, Examples) {
  EXPECT_NEAR(fraction_of_peak(378e12, 1.321e15), 0.2861, 5e-5);
  EXPECT_NEAR(fraction_of_peak(378e12, 6.667e14), 0.567, 5e-4);
  EXPECT_EQ(fraction_of_peak(3.0, 3.0), 1.0);
  EXPECT_THROW(fraction_of_peak(1.0, 0.0), InvalidArgument);
}

TEST(ExtrapolateThroughput, Examples) {
  EXPECT_NEAR(extrapolate_throughput(378e12, 1e12, 4.8e12), 1.8144e15, 1e3);
  EXPECT_NEAR(extrapolate_throughput(378e12, 1e12, 8e12), 3.024e15, 1e3);
  EXPECT_EQ(extrapolate_throughput(5.0, 2.0, 2.0), 5.0);
}

TEST(MemoryReport, DirectFp32At20480) {
  const auto r = memory_report(KernelKind::direct_fp32, 20480, std::nullopt, 4);
  EXPECT_EQ(r.bytes_per_matrix, 20480u * 20480 * 4);
  EXPECT_EQ(r.total_bytes, 3 * r.bytes_per_matrix);
  EXPECT_NEAR(static_cast<double>(r.total_bytes), 5.03e9, 0.01e9);
  EXPECT_EQ(r.expansion_factor_vs_direct, 1.0);
  EXPECT_FALSE(r.rank);
}

TEST(MemoryReport, FactorizedCountAt20480Rank512) {
  const auto r = memory_report(KernelKind::lowrank_auto, 20480, 512, 1);
  EXPECT_EQ(r.elements_per_matrix, 20972032u);
  EXPECT_EQ(r.bytes_per_matrix, 20972032u);
  EXPECT_NE(r.elements_per_matrix, 20990976u);  // the printed figure does not follow the formula
  EXPECT_EQ(r.total_bytes, 3u * 20972032);
}

TEST(MemoryReport, ExpansionFactorEighthRank) {
  for (std::uint64_t n : {1024u, 20480u}) {
    const double f = memory_report(KernelKind::lowrank_fp8, n, n / 8, 1).expansion_factor_vs_direct;
    EXPECT_NEAR(f, 4.0, 4.0 * 8.0 / static_cast<double>(n));
    EXPECT_NE(f, 3.25);
  }
}

TEST(MemoryReport, ExpansionInvariantToEqualWidths) {
  const double one = memory_report(KernelKind::lowrank_fp8, 4096, 100, 1).expansion_factor_vs_direct;
  for (std::uint64_t bpe : {2u, 4u, 8u}) {
    EXPECT_DOUBLE_EQ(memory_report(KernelKind::lowrank_fp8, 4096, 100, bpe).expansion_factor_vs_direct, one);
  }
}

TEST(MemoryReport, MixedWidthComparison) {
  // FP32 direct against FP8 factors at r = n/8: 4x from storage on top of 4x from rank.
  MemoryOptions opts;
  opts.direct_bytes_per_element = 4;
  const auto r = memory_report(KernelKind::lowrank_fp8, 20480, 2560, 1, opts);
  EXPECT_NEAR(r.expansion_factor_vs_direct, 16.0, 0.01);
}

TEST(MemoryReport, WorkspaceMultiplierAndErrors) {
  MemoryOptions opts;
  opts.workspace_multiplier = 3.0;
  const auto r = memory_report(KernelKind::direct_fp32, 20480, std::nullopt, 4, opts);
  EXPECT_NEAR(static_cast<double>(r.bytes_per_matrix), 5.03e9, 0.01e9);
  EXPECT_THROW(memory_report(KernelKind::lowrank_fp8, 64, std::nullopt, 1), InvalidArgument);
  EXPECT_THROW(memory_report(KernelKind::direct_fp8, 0, std::nullopt, 1), InvalidArgument);
  opts.workspace_multiplier = 0.5;
  EXPECT_THROW(memory_report(KernelKind::direct_fp8, 8, std::nullopt, 1, opts), InvalidArgument);
}

TEST(CapacityBound, InvertsMemoryReport) {
  const std::uint64_t cap = 25200000000;
  const auto n = capacity_bound_n(KernelKind::direct_fp32, cap, 4);
  EXPECT_LE(memory_report(KernelKind::direct_fp32, n, std::nullopt, 4).total_bytes, cap);
  EXPECT_GT(memory_report(KernelKind::direct_fp32, n + 1, std::nullopt, 4).total_bytes, cap);
  EXPECT_EQ(n, static_cast<std::uint64_t>(std::floor(std::sqrt(cap / 12.0))));
  const auto lr = capacity_bound_n(KernelKind::lowrank_fp8, cap, 1, 0.025);
  EXPECT_GT(lr, n);
  EXPECT_EQ(capacity_bound_n(KernelKind::direct_fp8, 2, 1), 0u);
}

TEST(ErrorScaleEstimate, SquareRootModel) {
  EXPECT_EQ(error_scale_estimate(100, 100), kErrorScaleConstant);
  EXPECT_NEAR(error_scale_estimate(4096, 256) / error_scale_estimate(4096, 1024), 2.0, 1e-15);
  EXPECT_THROW(error_scale_estimate(10, 11), InvalidArgument);
  EXPECT_THROW(error_scale_estimate(10, 0), InvalidArgument);
}

TEST(ThroughputReport, ShippedProfilesReproduceProjectionTable) {
  const auto base = shipped_profile("rtx4090");
  const auto self = throughput_report(base, base);
  EXPECT_EQ(self.measured_or_projected_flops, 378e12);
  EXPECT_NEAR(self.fraction_of_compute_peak, 0.286, 0.0005);
  const auto h200 = throughput_report(base, shipped_profile("h200"));
  EXPECT_NEAR(h200.measured_or_projected_flops / 1e12, 1814, 0.5);
  const auto b200 = throughput_report(base, shipped_profile("b200"));
  EXPECT_NEAR(b200.measured_or_projected_flops / 1e12, 3024, 0.5);
  EXPECT_GT(h200.capacity_bound_n, 35000u);
  EXPECT_GT(b200.capacity_bound_n, 50000u);
}

TEST(ThroughputReport, BandwidthCeilingBelowComputePeak) {
  for (const char* name : {"rtx4090", "h200", "b200"}) {
    const auto p = shipped_profile(name);
    EXPECT_LT(bandwidth_limited_flops(p.mem_bandwidth_bytes_per_s, 1), p.peak_flops_fp8) << name;
  }
}

TEST(ModelRendering, TextAndCsvCarryPublishedFigures) {
  const auto base = shipped_profile("rtx4090");
  const std::vector<HardwareProfile> targets{shipped_profile("h200"), shipped_profile("b200")};
  const auto text = render_model_text(base, targets);
  EXPECT_NE(text.find("published 1321, matches"), std::string::npos) << text;
  EXPECT_NE(text.find("published 28.6, matches"), std::string::npos);
  EXPECT_NE(text.find("published 1.81, matches"), std::string::npos);
  EXPECT_NE(text.find("published 3.02, matches"), std::string::npos);
  EXPECT_NE(text.find("20972032 elements  [published 20990976, diverges"), std::string::npos);
  EXPECT_NE(text.find("published 3.25, diverges"), std::string::npos);
  const auto csv = render_model_csv(base, targets);
  EXPECT_EQ(csv.rfind("label,value,unit,published,note\n", 0), 0u);
  EXPECT_NE(csv.find("projected throughput b200,3.024,PFLOPS,3.02,"), std::string::npos) << csv;
}
