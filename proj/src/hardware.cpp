#include "lrgemm/hardware.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "lrgemm/config.hpp"
#include "lrgemm/error.hpp"

namespace lrgemm {

namespace {

constexpr std::string_view kFields[] = {
    "name",            "mem_bandwidth_bytes_per_s", "peak_flops_fp32",
    "peak_flops_fp16", "peak_flops_fp8",            "memory_capacity_bytes",
    "launch_overhead_s_direct", "launch_overhead_s_lowrank"};

void require_positive(double v, std::string_view field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument("profile field '" + std::string(field) + "' must be positive and finite");
  }
}

void require_non_negative(double v, std::string_view field) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw InvalidArgument("profile field '" + std::string(field) + "' must be non-negative and finite");
  }
}

}  // namespace

double HardwareProfile::peak_flops(Precision p) const {
  switch (p) {
    case Precision::fp8: return peak_flops_fp8;
    case Precision::fp16: return peak_flops_fp16;
    case Precision::fp32:
    case Precision::fp64: return peak_flops_fp32;
  }
  return peak_flops_fp32;
}

void validate(const HardwareProfile& p) {
  if (p.name.empty()) throw InvalidArgument("profile field 'name' must not be empty");
  require_positive(p.mem_bandwidth_bytes_per_s, "mem_bandwidth_bytes_per_s");
  require_positive(p.peak_flops_fp32, "peak_flops_fp32");
  require_positive(p.peak_flops_fp16, "peak_flops_fp16");
  require_positive(p.peak_flops_fp8, "peak_flops_fp8");
  if (p.memory_capacity_bytes == 0) {
    throw InvalidArgument("profile field 'memory_capacity_bytes' must be positive");
  }
  require_non_negative(p.launch_overhead_s_direct, "launch_overhead_s_direct");
  require_non_negative(p.launch_overhead_s_lowrank, "launch_overhead_s_lowrank");
  if (p.peak_flops_fp16 < p.peak_flops_fp32) {
    throw InvalidArgument("profile field 'peak_flops_fp16' is below peak_flops_fp32");
  }
  if (p.peak_flops_fp8 < p.peak_flops_fp16) {
    throw InvalidArgument("profile field 'peak_flops_fp8' is below peak_flops_fp16");
  }
}

HardwareProfile parse_profile(std::string_view text) {
  const auto entries = parse_key_values(text);
  HardwareProfile p;
  bool present[std::size(kFields)] = {};
  for (const auto& e : entries) {
    const auto it = std::find(std::begin(kFields), std::end(kFields), e.key);
    if (it == std::end(kFields)) throw ParseError("unknown profile field '" + e.key + "'", e.line, e.key);
    present[it - std::begin(kFields)] = true;
    if (e.key == "name") p.name = e.value;
    else if (e.key == "mem_bandwidth_bytes_per_s") p.mem_bandwidth_bytes_per_s = parse_real(e.value, e.key, e.line);
    else if (e.key == "peak_flops_fp32") p.peak_flops_fp32 = parse_real(e.value, e.key, e.line);
    else if (e.key == "peak_flops_fp16") p.peak_flops_fp16 = parse_real(e.value, e.key, e.line);
    else if (e.key == "peak_flops_fp8") p.peak_flops_fp8 = parse_real(e.value, e.key, e.line);
    else if (e.key == "memory_capacity_bytes") {
      // Accept scientific notation for capacities, but only integral values.
      const double v = parse_real(e.value, e.key, e.line);
      if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19) {
        throw ParseError("field 'memory_capacity_bytes' must be a non-negative integer", e.line, e.key);
      }
      p.memory_capacity_bytes = static_cast<std::uint64_t>(v);
    }
    else if (e.key == "launch_overhead_s_direct") p.launch_overhead_s_direct = parse_real(e.value, e.key, e.line);
    else if (e.key == "launch_overhead_s_lowrank") p.launch_overhead_s_lowrank = parse_real(e.value, e.key, e.line);
  }
  for (std::size_t i = 0; i < std::size(kFields); ++i) {
    if (!present[i]) {
      throw ParseError("missing required profile field '" + std::string(kFields[i]) + "'", 0,
                       std::string(kFields[i]));
    }
  }
  validate(p);
  return p;
}

HardwareProfile load_profile(const std::filesystem::path& path) {
  try {
    return parse_profile(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0, e.field());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::string serialize_profile(const HardwareProfile& p) {
  std::string out;
  const auto line = [&](std::string_view key, const std::string& value) {
    out.append(key).append(" = ").append(value).append("\n");
  };
  line("name", p.name);
  line("mem_bandwidth_bytes_per_s", format_real(p.mem_bandwidth_bytes_per_s));
  line("peak_flops_fp32", format_real(p.peak_flops_fp32));
  line("peak_flops_fp16", format_real(p.peak_flops_fp16));
  line("peak_flops_fp8", format_real(p.peak_flops_fp8));
  line("memory_capacity_bytes", std::to_string(p.memory_capacity_bytes));
  line("launch_overhead_s_direct", format_real(p.launch_overhead_s_direct));
  line("launch_overhead_s_lowrank", format_real(p.launch_overhead_s_lowrank));
  return out;
}

std::filesystem::path default_profile_dir() {
  if (const char* env = std::getenv("LRGEMM_PROFILE_DIR"); env && *env) return env;
#ifdef LRGEMM_PROFILE_DIR
  return LRGEMM_PROFILE_DIR;
#else
  return "profiles";
#endif
}

HardwareProfile shipped_profile(std::string_view name) {
  return load_profile(default_profile_dir() / (std::string(name) + ".profile"));
}

HardwareProfile resolve_profile(std::string_view name_or_path) {
  const std::filesystem::path path(name_or_path);
  if (std::filesystem::is_regular_file(path)) return load_profile(path);
  return shipped_profile(name_or_path);
}

ProfileRegistry ProfileRegistry::load_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".profile") files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list profile directory " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  ProfileRegistry registry;
  for (const auto& f : files) registry.add(load_profile(f), f);
  return registry;
}

void ProfileRegistry::add(HardwareProfile profile, std::filesystem::path source) {
  validate(profile);
  if (profiles_.contains(profile.name)) {
    throw InvalidArgument("duplicate hardware profile name '" + profile.name + "'");
  }
  const std::string name = profile.name;
  profiles_.emplace(name, std::move(profile));
  if (!source.empty()) sources_.push_back(std::move(source));
}

const HardwareProfile& ProfileRegistry::at(std::string_view name) const {
  const auto it = profiles_.find(name);
  if (it == profiles_.end()) throw InvalidArgument("no hardware profile named '" + std::string(name) + "'");
  return it->second;
}

bool ProfileRegistry::contains(std::string_view name) const { return profiles_.contains(name); }

std::vector<std::string> ProfileRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : profiles_) out.push_back(name);
  return out;
}

}  // namespace lrgemm
