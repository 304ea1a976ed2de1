#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrgemm/config.hpp"
#include "lrgemm/matrix.hpp"
#include "lrgemm/selector.hpp"

namespace lrgemm {

struct BenchRecord {
  KernelKind method = KernelKind::direct_fp32;
  std::size_t n = 0;
  std::optional<std::size_t> rank;
  double time_s_mean = 0.0;
  double time_s_std = 0.0;
  double achieved_flops = 0.0;  // 2 n^3 / time_s_mean
  double rel_error = 0.0;
  std::uint64_t peak_bytes = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

struct SkipNotice {
  KernelKind method;
  std::size_t n;
  std::string reason;
};

struct BenchRun {
  std::vector<BenchRecord> records;
  std::vector<SkipNotice> skipped;
  // Lowrank records whose error exceeded the policy bound times the safety factor.
  std::vector<std::string> verification_failures;

  bool verified() const noexcept { return verification_failures.empty(); }
};

// Operand pair for size n drawn from the config's spectrum template and seed.
struct OperandPair {
  DenseMatrix a;
  DenseMatrix b;
};
OperandPair bench_operands(const BenchConfig& config, std::size_t n);

// Runs one method once on the pair, returning the product and the rank used.
struct MethodOutput {
  DenseMatrix product;
  std::optional<std::size_t> rank;
};
MethodOutput run_method(KernelKind method, const OperandPair& operands, const BenchConfig& config);

// For each (size, method): warmup_iters untimed runs, measure_iters timed
// runs, error against matmul_reference once, footprint from memory_report.
BenchRun run_bench(const BenchConfig& config);

inline constexpr std::string_view kCsvHeader =
    "method,n,rank,time_s_mean,time_s_std,achieved_flops,rel_error,peak_bytes,seed";

std::string records_to_csv(const std::vector<BenchRecord>& records);
std::vector<BenchRecord> records_from_csv(std::string_view text);

// Throws IoError when the file cannot be written.
void emit_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path);

struct PlotOutput {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> notices;
};

// time.svg, throughput.svg, rel_error.svg and speedup.svg (speedup only when
// direct_fp32 records exist). x axis is log2(n), one series per method.
PlotOutput emit_plots(const std::vector<BenchRecord>& records, const std::filesystem::path& dir);

}  // namespace lrgemm
