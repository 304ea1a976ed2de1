#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "lrgemm/config.hpp"
#include "lrgemm/error.hpp"
#include "lrgemm/hardware.hpp"

using namespace lrgemm;

namespace {

std::string strip_ws(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  return s;
}

const char* kValidProfile =
    "name = test\n"
    "mem_bandwidth_bytes_per_s = 1e12\n"
    "peak_flops_fp32 = 1e13\n"
    "peak_flops_fp16 = 1e14\n"
    "peak_flops_fp8 = 1e15\n"
    "memory_capacity_bytes = 1000\n"
    "launch_overhead_s_direct = 0\n"
    "launch_overhead_s_lowrank = 1e-4\n";

std::string replace_line(std::string text, const std::string& key, const std::string& line) {
  const auto at = text.find(key + " =");
  const auto eol = text.find('\n', at);
  return text.replace(at, eol - at, line);
}

BenchConfig config_from(const std::string& text) { return validate_config(parse_key_values(text)); }

}  // namespace

TEST(Profiles, ShippedValues) {
  const auto p = shipped_profile("rtx4090");
  EXPECT_EQ(p.mem_bandwidth_bytes_per_s, 1.0e12);
  EXPECT_EQ(p.peak_flops_fp8, 1.321e15);
  EXPECT_EQ(p.memory_capacity_bytes, 25200000000u);
  EXPECT_EQ(shipped_profile("h200").mem_bandwidth_bytes_per_s, 4.8e12);
  EXPECT_EQ(shipped_profile("h200").peak_flops_fp8, 4.0e15);
  EXPECT_EQ(shipped_profile("b200").mem_bandwidth_bytes_per_s, 8.0e12);
  EXPECT_EQ(shipped_profile("b200").peak_flops_fp8, 2.0e16);
  EXPECT_EQ(p.peak_flops(Precision::fp64), p.peak_flops_fp32);
}

TEST(Profiles, ShippedFilesAreCanonical) {
  for (const char* name : {"rtx4090", "h200", "b200"}) {
    const auto path = default_profile_dir() / (std::string(name) + ".profile");
    const std::string text = read_text_file(path);
    EXPECT_EQ(strip_ws(serialize_profile(load_profile(path))), strip_ws(text)) << name;
  }
}

TEST(Profiles, SerializeRoundTrip) {
  const auto p = parse_profile(kValidProfile);
  EXPECT_EQ(parse_profile(serialize_profile(p)), p);
  EXPECT_EQ(serialize_profile(parse_profile(serialize_profile(p))), serialize_profile(p));
}

TEST(Profiles, MissingFieldIsNamed) {
  std::string text = kValidProfile;
  text = replace_line(text, "peak_flops_fp16", "");
  try {
    parse_profile(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "peak_flops_fp16");
  }
}

TEST(Profiles, InvariantViolationsNameTheField) {
  const auto expect_field = [](const std::string& text, const std::string& field) {
    try {
      parse_profile(text);
      FAIL() << field;
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  expect_field(replace_line(kValidProfile, "mem_bandwidth_bytes_per_s", "mem_bandwidth_bytes_per_s = -1"),
               "mem_bandwidth_bytes_per_s");
  expect_field(replace_line(kValidProfile, "peak_flops_fp8", "peak_flops_fp8 = 1e12"), "peak_flops_fp8");
  expect_field(replace_line(kValidProfile, "memory_capacity_bytes", "memory_capacity_bytes = 1.5"),
               "memory_capacity_bytes");
  expect_field(replace_line(kValidProfile, "launch_overhead_s_direct", "launch_overhead_s_direct = x"),
               "launch_overhead_s_direct");
  expect_field(std::string(kValidProfile) + "colour = red\n", "colour");
  expect_field(std::string(kValidProfile) + "name = again\n", "name");
}

TEST(Profiles, ParseErrorCarriesLine) {
  try {
    parse_profile(replace_line(kValidProfile, "peak_flops_fp32", "peak_flops_fp32 = fast"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.field(), "peak_flops_fp32");
  }
}

TEST(Profiles, LoadMissingFile) {
  EXPECT_THROW(load_profile("/nonexistent/x.profile"), IoError);
  EXPECT_THROW(shipped_profile("tpu"), IoError);
}

TEST(ProfileRegistry, LoadsShippedDirectory) {
  const auto reg = ProfileRegistry::load_directory(default_profile_dir());
  EXPECT_EQ(reg.names(), (std::vector<std::string>{"b200", "h200", "rtx4090"}));
  EXPECT_EQ(reg.source_paths().size(), 3u);
  EXPECT_TRUE(reg.contains("h200"));
  EXPECT_EQ(reg.at("h200").peak_flops_fp8, 4e15);
  EXPECT_THROW(reg.at("a100"), InvalidArgument);
}

TEST(ProfileRegistry, RejectsDuplicates) {
  ProfileRegistry reg;
  reg.add(parse_profile(kValidProfile));
  EXPECT_THROW(reg.add(parse_profile(kValidProfile)), InvalidArgument);
}

TEST(KeyValues, CommentsBlanksAndErrors) {
  const auto kv = parse_key_values("# header\n\n a = 1 # trailing\nb=two\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].key, "a");
  EXPECT_EQ(kv[0].value, "1");
  EXPECT_EQ(kv[0].line, 3u);
  EXPECT_EQ(kv[1].value, "two");
  EXPECT_THROW(parse_key_values("novalue\n"), ParseError);
  EXPECT_THROW(parse_key_values("= 3\n"), ParseError);
  EXPECT_THROW(parse_key_values("a = 1\na = 2\n"), ParseError);
}

TEST(Numbers, StrictParsingAndShortestFormat) {
  EXPECT_EQ(parse_real("1e12", "f"), 1e12);
  EXPECT_THROW(parse_real("1e12x", "f"), ParseError);
  EXPECT_THROW(parse_real("", "f"), ParseError);
  EXPECT_THROW(parse_unsigned("-3", "f"), ParseError);
  EXPECT_EQ(format_real(1e12), "1e+12");
  EXPECT_EQ(format_real(0.1), "0.1");
  const double x = 0.1 + 0.2;
  EXPECT_EQ(parse_real(format_real(x), "f"), x);
}

TEST(GeometricSizes, Ladders) {
  EXPECT_EQ(geometric_sizes(256, 1024), (std::vector<std::size_t>{256, 384, 512, 768, 1024}));
  EXPECT_EQ(geometric_sizes(1024, 20480),
            (std::vector<std::size_t>{1024, 1472, 2048, 2944, 4096, 5824, 8192, 11648, 16384, 20480}));
  EXPECT_EQ(geometric_sizes(64, 64), (std::vector<std::size_t>{64}));
  EXPECT_EQ(geometric_sizes(100, 200), (std::vector<std::size_t>{128, 192, 200}));
  EXPECT_THROW(geometric_sizes(512, 256), InvalidArgument);
}

TEST(BenchConfigValidation, EmptyConfigGivesDefaults) {
  const auto c = validate_config({});
  EXPECT_EQ(c.warmup_iters, 5u);
  EXPECT_EQ(c.measure_iters, 5u);
  EXPECT_EQ(c.sizes, geometric_sizes(kDefaultStartN, kDefaultMaxN));
  EXPECT_EQ(c.methods.size(), 5u);
  EXPECT_EQ(to_string(c.rank_policy), "energy:0.99");
  EXPECT_EQ(c.profile, "rtx4090");
  EXPECT_EQ(c.coupling, OperandCoupling::coupled);
}

TEST(BenchConfigValidation, ExplicitValues) {
  const auto c = config_from(
      "sizes = 64, 128\nmethods = direct_fp32, lowrank_auto\nwarmup_iters = 0\nmeasure_iters = 2\n"
      "seed = 7\nrank_policy = error:0.05\nspectrum_decay = 0.8\ncoupling = independent\n"
      "svd_method = randomized\nfixed_rank = 16\nauto_precision = fp64\nthreads = 2\n");
  EXPECT_EQ(c.sizes, (std::vector<std::size_t>{64, 128}));
  EXPECT_EQ(c.methods, (std::vector<KernelKind>{KernelKind::direct_fp32, KernelKind::lowrank_auto}));
  EXPECT_EQ(c.warmup_iters, 0u);
  EXPECT_EQ(c.measure_iters, 2u);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(to_string(c.rank_policy), "error:0.05");
  EXPECT_EQ(c.spectrum_decay, 0.8);
  EXPECT_EQ(c.coupling, OperandCoupling::independent);
  EXPECT_EQ(c.svd_method, SvdMethod::randomized);
  EXPECT_EQ(*c.fixed_rank, 16u);
  EXPECT_EQ(c.auto_precision, FactorPrecision::fp64);
  EXPECT_EQ(c.threads, 2u);
}

TEST(BenchConfigValidation, TauOneAccepted) {
  EXPECT_EQ(to_string(config_from("rank_policy = energy:1.0\n").rank_policy), "energy:1");
}

TEST(BenchConfigValidation, Contradictions) {
  const auto field_of = [](const std::string& text) {
    try {
      config_from(text);
    } catch (const ParseError& e) {
      return e.field();
    }
    return std::string("<accepted>");
  };
  EXPECT_EQ(field_of("start_n = 512\nmax_n = 256\n"), "max_n");
  EXPECT_EQ(field_of("sizes = 64\nstart_n = 64\n"), "sizes");
  EXPECT_EQ(field_of("measure_iters = 0\n"), "measure_iters");
  EXPECT_EQ(field_of("ratio = 2\n"), "ratio");
  EXPECT_EQ(field_of("ratio = 1.41421356\n"), "<accepted>");
  EXPECT_EQ(field_of("methods = direct_fp64\n"), "methods");
  EXPECT_EQ(field_of("rank_policy = energy:2\n"), "rank_policy");
  EXPECT_EQ(field_of("spectrum_decay = 1.5\n"), "spectrum_decay");
  EXPECT_EQ(field_of("colour = blue\n"), "colour");
  EXPECT_EQ(field_of("sizes = 64, x\n"), "sizes");
  EXPECT_EQ(field_of("threads = 0\n"), "threads");
}

TEST(BenchConfigValidation, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "lrgemm_test_config.txt";
  {
    std::ofstream(path) << "# small run\nstart_n = 64\nmax_n = 128\n";
  }
  EXPECT_EQ(load_bench_config(path).sizes, (std::vector<std::size_t>{64, 128}));
  std::filesystem::remove(path);
  EXPECT_THROW(load_bench_config(path), IoError);
}
