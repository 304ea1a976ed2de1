#include "lrgemm/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <new>

#include "lrgemm/error.hpp"
#include "lrgemm/float_grid.hpp"
#include "lrgemm/fp8.hpp"
#include "lrgemm/lowrank.hpp"
#include "lrgemm/perf_model.hpp"

namespace lrgemm {

namespace {

std::uint64_t size_seed(std::uint64_t seed, std::size_t n) {
  return seed ^ (static_cast<std::uint64_t>(n) * 0x9E3779B97F4A7C15ull);
}

std::vector<double> operand_spectrum(const BenchConfig& config, std::size_t n) {
  // Values under the zero threshold would only add basis columns.
  std::vector<double> sigma;
  for (std::size_t j = 0; j < n; ++j) {
    const double rel = std::pow(config.spectrum_decay, static_cast<double>(j));
    if (rel < kRelativeZeroThreshold) break;
    sigma.push_back(config.spectrum_scale * rel);
  }
  return sigma;
}

DenseMatrix direct_fp16(const DenseMatrix& a, const DenseMatrix& b) {
  std::vector<float> ah(a.size()), bh(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ah[i] = static_cast<float>(round_to_fp16(a.data()[i]));
  for (std::size_t i = 0; i < b.size(); ++i) bh[i] = static_cast<float>(round_to_fp16(b.data()[i]));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<float> acc(m * n, 0.0f);
  for (std::size_t i = 0; i < m; ++i) {
    float* out = acc.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float x = ah[i * k + p];
      const float* brow = bh.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) out[j] += x * brow[j];
    }
  }
  return DenseMatrix(m, n, std::vector<double>(acc.begin(), acc.end()), Precision::fp32);
}

std::uint64_t record_bytes_per_element(KernelKind kind, const BenchConfig& config) {
  if (kind == KernelKind::lowrank_auto && config.auto_precision == FactorPrecision::fp64) return 8;
  return bytes_per_element(storage_precision(kind));
}

// Rank the footprint check assumes before the decomposition has run.
std::uint64_t planned_rank(KernelKind kind, const BenchConfig& config, std::size_t n) {
  if (kind == KernelKind::lowrank_fp8 && config.fixed_rank) return std::min(*config.fixed_rank, n);
  SelectorOptions opts;
  opts.model_spectrum_decay = config.spectrum_decay;
  return model_rank(config.rank_policy, n, n, opts);
}

}  // namespace

OperandPair bench_operands(const BenchConfig& config, std::size_t n) {
  const auto sigma = operand_spectrum(config, n);
  const std::size_t l = sigma.size();
  const std::uint64_t seed = size_seed(config.seed, n);
  const SyntheticBases first = synth_bases(n, n, l, seed);
  const SyntheticBases second = synth_bases(n, n, l, seed + 1);
  DenseMatrix a = compose_from_bases(first.u, sigma, first.v);
  const DenseMatrix& left = config.coupling == OperandCoupling::coupled ? first.v : second.u;
  DenseMatrix b = compose_from_bases(left, sigma, second.v);
  return {std::move(a), std::move(b)};
}

MethodOutput run_method(KernelKind method, const OperandPair& operands, const BenchConfig& config) {
  const auto& [a, b] = operands;
  if (a.cols() != b.rows()) {
    throw DimensionError("run_method: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  LowrankOptions lr;
  lr.method = config.svd_method;
  lr.seed = size_seed(config.seed, a.rows());
  lr.threads = config.threads;
  lr.diagnostics = false;
  switch (method) {
    case KernelKind::direct_fp32:
      return {matmul_reference(a, b, config.threads), std::nullopt};
    case KernelKind::direct_fp16:
      return {direct_fp16(a, b), std::nullopt};
    case KernelKind::direct_fp8:
      return {fp8_gemm(quantize(a), quantize(b)), std::nullopt};
    case KernelKind::lowrank_fp8: {
      lr.precision = FactorPrecision::fp8_factors;
      if (config.fixed_rank) {
        const auto factor = [&](const DenseMatrix& x, std::uint64_t seed) {
          const std::size_t r = std::min(*config.fixed_rank, std::min(x.rows(), x.cols()));
          return config.svd_method == SvdMethod::exact
                     ? truncated_svd(x, r)
                     : randomized_svd(x, r, kDefaultOversample, kDefaultPowerIters, seed);
        };
        const SvdFactors fa = factor(a, lr.seed);
        const SvdFactors fb = factor(b, lr.seed + 1);
        return {lowrank_multiply(quantize_factors(fa), quantize_factors(fb), config.threads), fa.rank()};
      }
      LowrankResult r = lowrank_gemm(a, b, config.rank_policy, lr);
      return {std::move(r.product), r.stats.rank_a};
    }
    case KernelKind::lowrank_auto: {
      lr.precision = config.auto_precision;
      LowrankResult r = lowrank_gemm(a, b, config.rank_policy, lr);
      return {std::move(r.product), r.stats.rank_a};
    }
  }
  throw InvalidArgument("run_method: unknown kernel kind");
}

BenchRun run_bench(const BenchConfig& config) {
  if (config.measure_iters < 1) throw InvalidArgument("run_bench: measure_iters must be >= 1");
  if (config.sizes.empty() || config.methods.empty()) {
    throw InvalidArgument("run_bench: need at least one size and one method");
  }
  BenchRun run;
  for (const std::size_t n : config.sizes) {
    std::optional<OperandPair> operands;
    std::optional<DenseMatrix> reference;
    for (const KernelKind method : config.methods) {
      const std::uint64_t bpe = record_bytes_per_element(method, config);
      const std::optional<std::uint64_t> planned =
          is_lowrank(method) ? std::optional<std::uint64_t>(planned_rank(method, config, n)) : std::nullopt;
      const std::uint64_t planned_bytes = memory_report(method, n, planned, bpe).total_bytes;
      // The emulation holds doubles, so the limit also covers the 8-byte working set.
      const std::uint64_t working_bytes = 5ull * n * n * sizeof(double);
      if (planned_bytes > config.memory_limit_bytes || working_bytes > config.memory_limit_bytes) {
        run.skipped.push_back({method, n, "modeled footprint exceeds memory_limit_bytes"});
        continue;
      }
      try {
        if (!operands) {
          operands = bench_operands(config, n);
          reference = matmul_reference(operands->a, operands->b, config.threads);
        }
        for (std::size_t i = 0; i < config.warmup_iters; ++i) run_method(method, *operands, config);
        std::vector<double> times;
        std::optional<MethodOutput> last;
        for (std::size_t i = 0; i < config.measure_iters; ++i) {
          const auto start = std::chrono::steady_clock::now();
          MethodOutput out = run_method(method, *operands, config);
          const auto stop = std::chrono::steady_clock::now();
          times.push_back(std::max(std::chrono::duration<double>(stop - start).count(), 1e-9));
          last = std::move(out);
        }
        double mean = 0.0;
        for (double t : times) mean += t;
        mean /= static_cast<double>(times.size());
        double var = 0.0;
        for (double t : times) var += (t - mean) * (t - mean);
        const double stdev = times.size() > 1 ? std::sqrt(var / static_cast<double>(times.size() - 1)) : 0.0;

        BenchRecord rec;
        rec.method = method;
        rec.n = n;
        rec.rank = last->rank;
        rec.time_s_mean = mean;
        rec.time_s_std = stdev;
        rec.achieved_flops = static_cast<double>(gemm_flops(n)) / mean;
        rec.rel_error = relative_error(last->product, *reference);
        rec.peak_bytes = memory_report(method, n, rec.rank, bpe).total_bytes;
        rec.seed = config.seed;
        run.records.push_back(rec);

        const bool policy_rank = is_lowrank(method) && !(method == KernelKind::lowrank_fp8 && config.fixed_rank);
        if (policy_rank) {
          if (const auto bound = implied_error_bound(config.rank_policy)) {
            const double limit = *bound * config.error_safety_factor;
            if (rec.rel_error > limit) {
              run.verification_failures.push_back(
                  std::string(to_string(method)) + " n=" + std::to_string(n) + ": rel_error " +
                  format_real(rec.rel_error) + " exceeds " + format_real(limit));
            }
          }
        }
      } catch (const std::bad_alloc&) {
        run.skipped.push_back({method, n, "out of memory"});
        operands.reset();
        reference.reset();
      }
    }
  }
  return run;
}

std::string records_to_csv(const std::vector<BenchRecord>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::string(to_string(r.method)) + "," + std::to_string(r.n) + "," +
           (r.rank ? std::to_string(*r.rank) : "") + "," + format_real(r.time_s_mean) + "," +
           format_real(r.time_s_std) + "," + format_real(r.achieved_flops) + "," +
           format_real(r.rel_error) + "," + std::to_string(r.peak_bytes) + "," +
           std::to_string(r.seed) + "\n";
  }
  return out;
}

std::vector<BenchRecord> records_from_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = eol + 1;
  }
  if (lines.empty() || lines.front() != kCsvHeader) throw ParseError("missing or wrong CSV header", 1);
  std::vector<BenchRecord> records;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = lines[li];
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const std::size_t line_no = li + 1;
    if (f.size() != 9) throw ParseError("expected 9 CSV fields", line_no);
    BenchRecord r;
    try {
      r.method = parse_kernel_kind(f[0]);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no, "method");
    }
    r.n = parse_unsigned(f[1], "n", line_no);
    if (!f[2].empty()) r.rank = parse_unsigned(f[2], "rank", line_no);
    r.time_s_mean = parse_real(f[3], "time_s_mean", line_no);
    r.time_s_std = parse_real(f[4], "time_s_std", line_no);
    r.achieved_flops = parse_real(f[5], "achieved_flops", line_no);
    r.rel_error = parse_real(f[6], "rel_error", line_no);
    r.peak_bytes = parse_unsigned(f[7], "peak_bytes", line_no);
    r.seed = parse_unsigned(f[8], "seed", line_no);
    records.push_back(r);
  }
  return records;
}

void emit_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string text = records_to_csv(records);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace lrgemm
