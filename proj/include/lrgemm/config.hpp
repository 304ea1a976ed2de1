#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrgemm/lowrank.hpp"
#include "lrgemm/selector.hpp"
#include "lrgemm/svd.hpp"

namespace lrgemm {

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// Parses `key = value` lines. Blank lines and '#' comments are skipped,
// keys must be unique. Throws ParseError with the offending line.
std::vector<KeyValue> parse_key_values(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

// Strict number parsing for config values; ParseError names the field.
double parse_real(std::string_view text, std::string_view field, std::size_t line = 0);
std::uint64_t parse_unsigned(std::string_view text, std::string_view field, std::size_t line = 0);

// Shortest round-trip decimal form of a double.
std::string format_real(double value);

// How the two benchmark operands share singular bases.
//   coupled:     A = U S V^T, B = V S W^T (B's column space is A's row space)
//   independent: A = U S V^T, B = X S W^T with unrelated X
enum class OperandCoupling { coupled, independent };

std::string_view to_string(OperandCoupling c);

struct BenchConfig {
  std::vector<std::size_t> sizes;  // resolved size list
  std::vector<KernelKind> methods;
  std::size_t warmup_iters = 5;
  std::size_t measure_iters = 5;
  std::uint64_t seed = 0;
  RankPolicy rank_policy = EnergyThreshold{0.99};
  std::string profile = "rtx4090";
  // Operand spectrum template: sigma_j = spectrum_scale * spectrum_decay^j.
  double spectrum_decay = 0.9;
  double spectrum_scale = 1.0;
  OperandCoupling coupling = OperandCoupling::coupled;
  SvdMethod svd_method = SvdMethod::exact;
  // Rank used by lowrank_fp8; unset means "follow rank_policy".
  std::optional<std::size_t> fixed_rank;
  // Factor precision of lowrank_auto.
  FactorPrecision auto_precision = FactorPrecision::fp8_factors;
  // Worker threads inside the measured region (1 keeps timing single-threaded).
  unsigned threads = 1;
  // Records whose modeled footprint exceeds this are skipped.
  std::uint64_t memory_limit_bytes = 8ull << 30;
  // Multiplier on the policy's implied error bound for verification.
  double error_safety_factor = 3.0;
};

inline constexpr std::size_t kDefaultStartN = 128;
inline constexpr std::size_t kDefaultMaxN = 512;
inline constexpr std::size_t kSizeMultiple = 64;

// start_n * sqrt(2)^i rounded up to a multiple of 64, up to max_n; max_n is
// appended when the ladder steps over it.
std::vector<std::size_t> geometric_sizes(std::size_t start_n, std::size_t max_n);

// Builds a BenchConfig from parsed key/values, applying defaults.
//
// Keys: sizes (comma list) | start_n, max_n; methods; warmup_iters;
// measure_iters; seed; rank_policy; profile; spectrum_decay; spectrum_scale;
// coupling; svd_method; fixed_rank; auto_precision; threads;
// memory_limit_bytes; error_safety_factor.
BenchConfig validate_config(const std::vector<KeyValue>& raw);
BenchConfig load_bench_config(const std::filesystem::path& path);

}  // namespace lrgemm
