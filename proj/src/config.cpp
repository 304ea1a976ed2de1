#include "lrgemm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "lrgemm/error.hpp"

namespace lrgemm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (!item.empty()) items.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

}  // namespace

std::vector<KeyValue> parse_key_values(std::string_view text) {
  std::vector<KeyValue> out;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("missing key", line_no);
    if (!seen.insert(std::string(key)).second) {
      throw ParseError("duplicate key '" + std::string(key) + "'", line_no, std::string(key));
    }
    out.push_back({std::string(key), std::string(value), line_no});
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

double parse_real(std::string_view text, std::string_view field, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("field '" + std::string(field) + "': '" + std::string(text) +
                         "' is not a number",
                     line, std::string(field));
  }
  return value;
}

std::uint64_t parse_unsigned(std::string_view text, std::string_view field, std::size_t line) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("field '" + std::string(field) + "': '" + std::string(text) +
                         "' is not a non-negative integer",
                     line, std::string(field));
  }
  return value;
}

std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string_view to_string(OperandCoupling c) {
  return c == OperandCoupling::coupled ? "coupled" : "independent";
}

std::vector<std::size_t> geometric_sizes(std::size_t start_n, std::size_t max_n) {
  if (start_n == 0 || max_n < start_n) {
    throw InvalidArgument("size ladder needs 0 < start_n <= max_n (got " + std::to_string(start_n) +
                          ", " + std::to_string(max_n) + ")");
  }
  std::vector<std::size_t> sizes;
  for (int i = 0;; ++i) {
    const double raw = static_cast<double>(start_n) * std::pow(std::numbers::sqrt2, i);
    // Round up to the next multiple of 64; the slack keeps exact powers of
    // two (256 * sqrt2^2 = 512.0000000000001) where they belong.
    const double steps = std::ceil(raw / kSizeMultiple * (1.0 - 1e-9));
    const auto n = static_cast<std::size_t>(steps) * kSizeMultiple;
    if (n > max_n) break;
    if (sizes.empty() || sizes.back() != n) sizes.push_back(n);
  }
  if (sizes.empty() || sizes.back() != max_n) sizes.push_back(max_n);
  return sizes;
}

BenchConfig validate_config(const std::vector<KeyValue>& raw) {
  BenchConfig config;
  std::map<std::string, const KeyValue*, std::less<>> kv;
  for (const auto& entry : raw) kv[entry.key] = &entry;

  static const std::set<std::string, std::less<>> known{
      "sizes",         "start_n",        "max_n",          "methods",       "warmup_iters",
      "measure_iters", "seed",           "rank_policy",    "profile",       "spectrum_decay",
      "spectrum_scale", "coupling",      "svd_method",     "fixed_rank",    "auto_precision",
      "threads",       "memory_limit_bytes", "error_safety_factor", "ratio"};
  for (const auto& entry : raw) {
    if (!known.contains(entry.key)) {
      throw ParseError("unknown key '" + entry.key + "'", entry.line, entry.key);
    }
  }

  const auto get = [&](std::string_view key) -> const KeyValue* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : it->second;
  };
  const auto wrap = [](const KeyValue& e, auto&& fn) {
    try {
      return fn();
    } catch (const ParseError&) {
      throw;
    } catch (const Error& err) {
      throw ParseError("field '" + e.key + "': " + err.what(), e.line, e.key);
    }
  };

  if (const auto* e = get("ratio")) {
    const double ratio = parse_real(e->value, e->key, e->line);
    if (std::abs(ratio - std::numbers::sqrt2) > 1e-6) {
      throw ParseError("only the sqrt(2) size ratio is supported", e->line, e->key);
    }
  }
  const auto* sizes = get("sizes");
  const auto* start = get("start_n");
  const auto* max = get("max_n");
  if (sizes && (start || max)) {
    throw ParseError("give either 'sizes' or 'start_n'/'max_n', not both", sizes->line, "sizes");
  }
  if (sizes) {
    for (auto item : split_list(sizes->value)) {
      const auto n = parse_unsigned(item, "sizes", sizes->line);
      if (n == 0) throw ParseError("sizes must be positive", sizes->line, "sizes");
      config.sizes.push_back(static_cast<std::size_t>(n));
    }
    if (config.sizes.empty()) throw ParseError("empty size list", sizes->line, "sizes");
  } else {
    const std::size_t start_n = start ? parse_unsigned(start->value, "start_n", start->line) : kDefaultStartN;
    const std::size_t max_n = max ? parse_unsigned(max->value, "max_n", max->line)
                                  : std::max<std::size_t>(kDefaultMaxN, start_n);
    if (max_n < start_n) {
      throw ParseError("max_n (" + std::to_string(max_n) + ") is below start_n (" +
                           std::to_string(start_n) + ")",
                       max ? max->line : 0, "max_n");
    }
    if (start_n == 0) throw ParseError("start_n must be positive", start ? start->line : 0, "start_n");
    config.sizes = geometric_sizes(start_n, max_n);
  }

  if (const auto* e = get("methods")) {
    for (auto item : split_list(e->value)) {
      const KernelKind kind = wrap(*e, [&] { return parse_kernel_kind(item); });
      if (std::find(config.methods.begin(), config.methods.end(), kind) == config.methods.end()) {
        config.methods.push_back(kind);
      }
    }
    if (config.methods.empty()) throw ParseError("empty method list", e->line, e->key);
  } else {
    config.methods.assign(kAllKernelKinds.begin(), kAllKernelKinds.end());
  }

  if (const auto* e = get("warmup_iters")) config.warmup_iters = parse_unsigned(e->value, e->key, e->line);
  if (const auto* e = get("measure_iters")) {
    config.measure_iters = parse_unsigned(e->value, e->key, e->line);
    if (config.measure_iters < 1) throw ParseError("measure_iters must be >= 1", e->line, e->key);
  }
  if (const auto* e = get("seed")) config.seed = parse_unsigned(e->value, e->key, e->line);
  if (const auto* e = get("rank_policy")) {
    config.rank_policy = wrap(*e, [&] { return parse_rank_policy(e->value); });
  }
  if (const auto* e = get("profile")) {
    if (e->value.empty()) throw ParseError("empty profile reference", e->line, e->key);
    config.profile = e->value;
  }
  if (const auto* e = get("spectrum_decay")) {
    config.spectrum_decay = parse_real(e->value, e->key, e->line);
    if (!(config.spectrum_decay > 0.0 && config.spectrum_decay <= 1.0)) {
      throw ParseError("spectrum_decay must be in (0, 1]", e->line, e->key);
    }
  }
  if (const auto* e = get("spectrum_scale")) {
    config.spectrum_scale = parse_real(e->value, e->key, e->line);
    if (!(config.spectrum_scale > 0.0) || !std::isfinite(config.spectrum_scale)) {
      throw ParseError("spectrum_scale must be positive", e->line, e->key);
    }
  }
  if (const auto* e = get("coupling")) {
    if (e->value == "coupled") config.coupling = OperandCoupling::coupled;
    else if (e->value == "independent") config.coupling = OperandCoupling::independent;
    else throw ParseError("coupling must be 'coupled' or 'independent'", e->line, e->key);
  }
  if (const auto* e = get("svd_method")) {
    config.svd_method = wrap(*e, [&] { return parse_svd_method(e->value); });
  }
  if (const auto* e = get("fixed_rank")) {
    const auto r = parse_unsigned(e->value, e->key, e->line);
    if (r == 0) throw ParseError("fixed_rank must be positive", e->line, e->key);
    config.fixed_rank = static_cast<std::size_t>(r);
  }
  if (const auto* e = get("auto_precision")) {
    config.auto_precision = wrap(*e, [&] { return parse_factor_precision(e->value); });
  }
  if (const auto* e = get("threads")) {
    const auto t = parse_unsigned(e->value, e->key, e->line);
    if (t == 0 || t > 1024) throw ParseError("threads must be in [1, 1024]", e->line, e->key);
    config.threads = static_cast<unsigned>(t);
  }
  if (const auto* e = get("memory_limit_bytes")) {
    config.memory_limit_bytes = parse_unsigned(e->value, e->key, e->line);
  }
  if (const auto* e = get("error_safety_factor")) {
    config.error_safety_factor = parse_real(e->value, e->key, e->line);
    if (!(config.error_safety_factor >= 1.0)) {
      throw ParseError("error_safety_factor must be >= 1", e->line, e->key);
    }
  }
  return config;
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
  return validate_config(parse_key_values(read_text_file(path)));
}

}  // namespace lrgemm
