#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "lrgemm/bench.hpp"
#include "lrgemm/config.hpp"
#include "lrgemm/error.hpp"
#include "lrgemm/fp8.hpp"
#include "lrgemm/hardware.hpp"
#include "lrgemm/lowrank.hpp"
#include "lrgemm/perf_model.hpp"
#include "lrgemm/selector.hpp"
#include "lrgemm/svd.hpp"

namespace py = pybind11;
using namespace lrgemm;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DenseMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
  return DenseMatrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const DenseMatrix& m) {
  Array out({m.rows(), m.cols()});
  std::memcpy(out.mutable_data(), m.data().data(), m.size() * sizeof(double));
  return out;
}

py::tuple factors_tuple(const SvdFactors& f) {
  return py::make_tuple(to_array(f.u), py::array_t<double>(f.s.size(), f.s.data()), to_array(f.vt));
}

SvdFactors factors_from(const py::tuple& t) {
  if (t.size() != 3) throw InvalidArgument("factors must be a (u, s, vt) tuple");
  SvdFactors f{to_matrix(t[0].cast<Array>()), t[1].cast<std::vector<double>>(), to_matrix(t[2].cast<Array>())};
  return f;
}

py::dict cost_dict(const CostEstimate& c) {
  py::dict d;
  d["kind"] = std::string(to_string(c.kind));
  d["rank"] = c.rank;
  d["flops"] = c.flops;
  d["bytes_moved"] = c.bytes_moved;
  d["predicted_time_s"] = c.predicted_time_s;
  d["limited_by"] = std::string(to_string(c.limited_by));
  return d;
}

py::dict profile_dict(const HardwareProfile& p) {
  py::dict d;
  d["name"] = p.name;
  d["mem_bandwidth_bytes_per_s"] = p.mem_bandwidth_bytes_per_s;
  d["peak_flops_fp32"] = p.peak_flops_fp32;
  d["peak_flops_fp16"] = p.peak_flops_fp16;
  d["peak_flops_fp8"] = p.peak_flops_fp8;
  d["memory_capacity_bytes"] = p.memory_capacity_bytes;
  d["launch_overhead_s_direct"] = p.launch_overhead_s_direct;
  d["launch_overhead_s_lowrank"] = p.launch_overhead_s_lowrank;
  return d;
}

std::vector<HardwareProfile> resolve_all(const std::vector<std::string>& names) {
  std::vector<HardwareProfile> out;
  for (const auto& n : names) out.push_back(resolve_profile(n));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Low-rank GEMM toolkit";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  m.def("matmul_reference", [](const Array& a, const Array& b) {
    return to_array(matmul_reference(to_matrix(a), to_matrix(b)));
  });
  m.def("relative_error", [](const Array& approx, const Array& exact) {
    return relative_error(to_matrix(approx), to_matrix(exact));
  });

  m.def("singular_values", [](const Array& a) { return singular_values(to_matrix(a)); });
  m.def("truncated_svd", [](const Array& a, std::size_t r) { return factors_tuple(truncated_svd(to_matrix(a), r)); },
        py::arg("a"), py::arg("r"));
  m.def("randomized_svd",
        [](const Array& a, std::size_t r, std::size_t oversample, std::size_t power_iters, std::uint64_t seed) {
          return factors_tuple(randomized_svd(to_matrix(a), r, oversample, power_iters, seed));
        },
        py::arg("a"), py::arg("r"), py::arg("oversample") = kDefaultOversample,
        py::arg("power_iters") = kDefaultPowerIters, py::arg("seed") = 0);
  m.def("decompose",
        [](const Array& a, const std::string& policy, const std::string& method, std::uint64_t seed) {
          return factors_tuple(decompose(to_matrix(a), parse_rank_policy(policy), parse_svd_method(method), seed));
        },
        py::arg("a"), py::arg("policy") = "energy:0.99", py::arg("method") = "exact", py::arg("seed") = 0);
  m.def("select_rank",
        [](const std::vector<double>& s, const std::string& policy, std::size_t rows, std::size_t cols) {
          return select_rank(s, parse_rank_policy(policy), rows, cols);
        },
        py::arg("s"), py::arg("policy"), py::arg("m"), py::arg("n"));
  m.def("reconstruct", [](const py::tuple& f) { return to_array(reconstruct(factors_from(f))); });

  m.def("lowrank_multiply", [](const py::tuple& fa, const py::tuple& fb) {
    return to_array(lowrank_multiply(factors_from(fa), factors_from(fb)));
  });
  m.def("lowrank_gemm",
        [](const Array& a, const Array& b, const std::string& policy, const std::string& precision,
           const std::string& method, std::uint64_t seed) {
          LowrankOptions opts;
          opts.precision = parse_factor_precision(precision);
          opts.method = parse_svd_method(method);
          opts.seed = seed;
          const auto res = lowrank_gemm(to_matrix(a), to_matrix(b), parse_rank_policy(policy), opts);
          py::dict stats;
          stats["rank_a"] = res.stats.rank_a;
          stats["rank_b"] = res.stats.rank_b;
          stats["flops_lowrank"] = res.stats.flops_lowrank;
          stats["flops_dense_equivalent"] = res.stats.flops_dense_equivalent;
          stats["rel_error_vs_reconstruction"] = res.stats.rel_error_vs_reconstruction;
          stats["wall_time_seconds"] = res.stats.wall_time_seconds;
          return py::make_tuple(to_array(res.product), stats);
        },
        py::arg("a"), py::arg("b"), py::arg("policy") = "energy:0.99", py::arg("precision") = "fp64",
        py::arg("method") = "exact", py::arg("seed") = 0);
  m.def("lowrank_flops", &lowrank_flops);

  m.def("fp8_encode", [](double v, const std::string& f) { return encode(v, parse_fp8_format(f)); },
        py::arg("value"), py::arg("format") = "e4m3");
  m.def("fp8_decode", [](std::uint8_t c, const std::string& f) { return decode(c, parse_fp8_format(f)); },
        py::arg("code"), py::arg("format") = "e4m3");
  m.def("quantize",
        [](const Array& a, const std::string& f) {
          const auto q = quantize(to_matrix(a), parse_fp8_format(f));
          py::array_t<std::uint8_t> codes({q.rows, q.cols});
          std::memcpy(codes.mutable_data(), q.codes.data(), q.codes.size());
          return py::make_tuple(codes, q.scale);
        },
        py::arg("a"), py::arg("format") = "e4m3");
  m.def("quantize_roundtrip", [](const Array& a, const std::string& f) {
    return to_array(dequantize(quantize(to_matrix(a), parse_fp8_format(f))));
  }, py::arg("a"), py::arg("format") = "e4m3");
  m.def("fp8_gemm",
        [](const Array& a, const Array& b, const std::string& f) {
          const auto& fmt = parse_fp8_format(f);
          return to_array(fp8_gemm(quantize(to_matrix(a), fmt), quantize(to_matrix(b), fmt)));
        },
        py::arg("a"), py::arg("b"), py::arg("format") = "e4m3");

  m.def("profile", [](const std::string& name) { return profile_dict(resolve_profile(name)); });
  m.def("estimate_cost",
        [](const std::string& kind, std::uint64_t mm, std::uint64_t k, std::uint64_t n,
           std::optional<std::uint64_t> rank, const std::string& profile) {
          return cost_dict(estimate_cost(parse_kernel_kind(kind), mm, k, n, rank, resolve_profile(profile)));
        },
        py::arg("kind"), py::arg("m"), py::arg("k"), py::arg("n"), py::arg("rank") = py::none(),
        py::arg("profile") = "rtx4090");
  m.def("select_kernel",
        [](std::uint64_t mm, std::uint64_t k, std::uint64_t n, const std::string& profile, const std::string& policy,
           std::optional<double> error_budget) {
          const auto cfg = select_kernel(mm, k, n, resolve_profile(profile), parse_rank_policy(policy), error_budget);
          py::dict d = cost_dict(cfg.cost);
          py::list candidates;
          for (const auto& c : cfg.candidates) candidates.append(cost_dict(c));
          d["candidates"] = candidates;
          return d;
        },
        py::arg("m"), py::arg("k"), py::arg("n"), py::arg("profile") = "rtx4090",
        py::arg("policy") = "energy:0.99", py::arg("error_budget") = py::none());

  m.def("memory_report",
        [](const std::string& kind, std::uint64_t n, std::optional<std::uint64_t> rank, std::uint64_t bpe) {
          const auto r = memory_report(parse_kernel_kind(kind), n, rank, bpe);
          py::dict d;
          d["elements_per_matrix"] = r.elements_per_matrix;
          d["bytes_per_matrix"] = r.bytes_per_matrix;
          d["total_bytes"] = r.total_bytes;
          d["expansion_factor_vs_direct"] = r.expansion_factor_vs_direct;
          return d;
        },
        py::arg("kind"), py::arg("n"), py::arg("rank") = py::none(), py::arg("bytes_per_element") = 1);
  m.def("model_text",
        [](const std::string& profile, const std::vector<std::string>& targets) {
          return render_model_text(resolve_profile(profile), resolve_all(targets));
        },
        py::arg("profile") = "rtx4090", py::arg("targets") = std::vector<std::string>{"h200", "b200"});
  m.def("model_csv",
        [](const std::string& profile, const std::vector<std::string>& targets) {
          return render_model_csv(resolve_profile(profile), resolve_all(targets));
        },
        py::arg("profile") = "rtx4090", py::arg("targets") = std::vector<std::string>{"h200", "b200"});

  m.def("run_bench", [](const std::string& config_text) {
    const auto run = run_bench(validate_config(parse_key_values(config_text)));
    return py::make_tuple(records_to_csv(run.records), run.verification_failures);
  }, py::arg("config_text") = "");
}
