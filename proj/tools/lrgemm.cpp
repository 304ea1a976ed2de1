// lrgemm command line tool: bench, model, svd, multiply, quantize.
//
// Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lrgemm/bench.hpp"
#include "lrgemm/config.hpp"
#include "lrgemm/error.hpp"
#include "lrgemm/float_grid.hpp"
#include "lrgemm/fp8.hpp"
#include "lrgemm/hardware.hpp"
#include "lrgemm/io.hpp"
#include "lrgemm/lowrank.hpp"
#include "lrgemm/perf_model.hpp"
#include "lrgemm/svd.hpp"

namespace {

using namespace lrgemm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerification = 2;
constexpr int kExitIo = 3;

// Malformed binary containers are reported as I/O failures. Bad values in
// config or profile text stay usage errors.
template <typename Fn>
auto reading(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    throw IoError(path + ": " + e.what());
  }
}

struct Operand {
  std::optional<SvdFactors> factors;
  std::optional<DenseMatrix> matrix;
};

Operand load_operand(const std::string& path) {
  return reading(path, [&] {
    const auto bytes = read_binary_file(path);
    Operand op;
    if (detect_container(bytes) == ContainerKind::factor_bundle) {
      op.factors = decode_lrfb(bytes);
    } else {
      std::size_t offset = 0;
      op.matrix = decode_lrgm(bytes, offset).matrix;
    }
    return op;
  });
}

DenseMatrix dense(const Operand& op) { return op.matrix ? *op.matrix : reconstruct(*op.factors); }

DenseMatrix round_matrix(const DenseMatrix& m, Precision p) {
  std::vector<double> data(m.data().begin(), m.data().end());
  for (double& v : data) v = p == Precision::fp16 ? round_to_fp16(v) : round_to_fp32(v);
  return DenseMatrix(m.rows(), m.cols(), std::move(data), p);
}

int cmd_bench(const std::string& config_path, const std::string& out_csv, const std::string& plots_dir,
              std::optional<std::uint64_t> seed, std::optional<unsigned> threads) {
  BenchConfig config = config_path.empty() ? validate_config({}) : load_bench_config(config_path);
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;
  const BenchRun run = run_bench(config);

  std::printf("%-13s %6s %5s %12s %12s %12s %10s\n", "method", "n", "rank", "time_s", "std_s",
              "flop/s", "rel_err");
  for (const auto& r : run.records) {
    std::printf("%-13s %6zu %5s %12.4g %12.4g %12.4g %10.3g\n", std::string(to_string(r.method)).c_str(), r.n,
                r.rank ? std::to_string(*r.rank).c_str() : "-", r.time_s_mean, r.time_s_std, r.achieved_flops,
                r.rel_error);
  }
  for (const auto& s : run.skipped) {
    std::fprintf(stderr, "skipped %s n=%zu: %s\n", std::string(to_string(s.method)).c_str(), s.n,
                 s.reason.c_str());
  }
  if (!out_csv.empty()) emit_csv(run.records, out_csv);
  if (!plots_dir.empty() && !run.records.empty()) {
    for (const auto& notice : emit_plots(run.records, plots_dir).notices) std::fprintf(stderr, "%s\n", notice.c_str());
  }
  for (const auto& f : run.verification_failures) std::fprintf(stderr, "verification failed: %s\n", f.c_str());
  return run.verified() ? kExitOk : kExitVerification;
}

int cmd_model(const std::string& profile, const std::vector<std::string>& targets, bool csv) {
  const HardwareProfile base = resolve_profile(profile);
  std::vector<HardwareProfile> resolved;
  for (const auto& t : targets) resolved.push_back(resolve_profile(t));
  std::cout << (csv ? render_model_csv(base, resolved) : render_model_text(base, resolved));
  return kExitOk;
}

int cmd_svd(const std::string& in, const std::string& out, const std::string& policy_text,
            const std::string& method_text, std::optional<std::size_t> rank, std::uint64_t seed) {
  const SvdMethod method = parse_svd_method(method_text);
  const RankPolicy policy = parse_rank_policy(policy_text);
  const DenseMatrix a = reading(in, [&] { return read_lrgm(in).matrix; });
  SvdFactors f = [&] {
    if (!rank) return decompose(a, policy, method, seed);
    const std::size_t r = std::min(*rank, std::min(a.rows(), a.cols()));
    return method == SvdMethod::exact ? truncated_svd(a, r)
                                      : randomized_svd(a, r, kDefaultOversample, kDefaultPowerIters, seed);
  }();
  write_lrfb(out, f);
  std::printf("rank %zu (%zu x %zu)\n", f.rank(), a.rows(), a.cols());
  return kExitOk;
}

int cmd_multiply(const std::string& lhs, const std::string& rhs, const std::string& out,
                 const std::string& precision_text) {
  const Precision precision = parse_precision(precision_text);
  const Operand a = load_operand(lhs);
  const Operand b = load_operand(rhs);
  DenseMatrix c = [&] {
    if (a.factors && b.factors) {
      if (precision == Precision::fp8) return lowrank_multiply(quantize_factors(*a.factors), quantize_factors(*b.factors));
      if (precision == Precision::fp64) return lowrank_multiply(*a.factors, *b.factors);
      throw InvalidArgument("factor bundles multiply in fp64 or fp8 only");
    }
    const DenseMatrix da = dense(a), db = dense(b);
    if (da.cols() != db.rows()) {
      throw DimensionError("cannot multiply " + da.shape_string() + " by " + db.shape_string());
    }
    switch (precision) {
      case Precision::fp64: return matmul_reference(da, db);
      case Precision::fp8: return fp8_gemm(quantize(da), quantize(db));
      case Precision::fp32:
      case Precision::fp16: {
        const DenseMatrix p = matmul_reference(round_matrix(da, precision), round_matrix(db, precision));
        return round_matrix(p, Precision::fp32);
      }
    }
    throw InvalidArgument("unknown precision");
  }();
  write_lrgm(out, c);
  std::printf("%s\n", c.shape_string().c_str());
  return kExitOk;
}

int cmd_quantize(const std::string& in, const std::string& out, const std::string& format) {
  const Fp8Format& f = parse_fp8_format(format);
  const DenseMatrix a = reading(in, [&] { return read_lrgm(in).matrix; });
  const Fp8Tensor q = quantize(a, f);
  write_lrgm(out, q);
  std::printf("%s scale %s\n", f.name.c_str(), format_real(q.scale).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank GEMM toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_csv, plots_dir;
  std::optional<std::uint64_t> bench_seed;
  std::optional<unsigned> bench_threads;
  auto* bench = app.add_subcommand("bench", "Run the benchmark protocol");
  bench->add_option("--config", config_path, "Bench config file (key = value)");
  bench->add_option("--out-csv", out_csv, "Write records as CSV");
  bench->add_option("--plots", plots_dir, "Write SVG plots into this directory");
  bench->add_option("--seed", bench_seed, "Override the config seed");
  bench->add_option("--threads", bench_threads, "Worker threads inside the measured region")
      ->check(CLI::Range(1, 1024));

  std::string profile = "rtx4090";
  std::vector<std::string> targets{"h200", "b200"};
  bool model_csv = false;
  auto* model = app.add_subcommand("model", "Print the roofline derivation and projection table");
  model->add_option("--profile", profile, "Base profile (file or shipped name)");
  model->add_option("--targets", targets, "Projection targets (files or shipped names)");
  model->add_flag("--csv", model_csv, "Emit CSV instead of text");

  std::string svd_in, svd_out, policy = "energy:0.99", method = "exact";
  std::optional<std::size_t> svd_rank;
  std::uint64_t svd_seed = 0;
  auto* svd = app.add_subcommand("svd", "Decompose an LRGM matrix into an LRFB factor bundle");
  svd->add_option("input", svd_in, "LRGM matrix")->required();
  svd->add_option("output", svd_out, "LRFB bundle")->required();
  svd->add_option("--policy", policy, "fraction:A | energy:T | error:E | memory:B[:bpe]");
  svd->add_option("--method", method, "exact | randomized");
  svd->add_option("--rank", svd_rank, "Fixed rank (overrides --policy)")->check(CLI::PositiveNumber);
  svd->add_option("--seed", svd_seed, "Sketch seed for the randomized method");

  std::string lhs, rhs, mul_out, precision = "fp64";
  auto* multiply = app.add_subcommand("multiply", "Multiply two LRFB bundles or LRGM matrices");
  multiply->add_option("lhs", lhs, "Left operand (LRGM or LRFB)")->required();
  multiply->add_option("rhs", rhs, "Right operand (LRGM or LRFB)")->required();
  multiply->add_option("output", mul_out, "LRGM result")->required();
  multiply->add_option("--precision", precision, "fp64 | fp32 | fp16 | fp8");

  std::string q_in, q_out, format = "e4m3";
  auto* quant = app.add_subcommand("quantize", "Quantize an LRGM matrix to FP8");
  quant->add_option("input", q_in, "LRGM matrix")->required();
  quant->add_option("output", q_out, "FP8-tagged LRGM")->required();
  quant->add_option("--format", format, "e4m3 | e5m2")->check(CLI::IsMember({"e4m3", "e5m2"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*bench) return cmd_bench(config_path, out_csv, plots_dir, bench_seed, bench_threads);
    if (*model) return cmd_model(profile, targets, model_csv);
    if (*svd) return cmd_svd(svd_in, svd_out, policy, method, svd_rank, svd_seed);
    if (*multiply) return cmd_multiply(lhs, rhs, mul_out, precision);
    if (*quant) return cmd_quantize(q_in, q_out, format);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
