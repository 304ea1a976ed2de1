#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lrgemm/matrix.hpp"

namespace lrgemm {

// Accelerator description consumed by the cost and roofline models.
struct HardwareProfile {
  std::string name;
  double mem_bandwidth_bytes_per_s = 0.0;
  double peak_flops_fp32 = 0.0;
  double peak_flops_fp16 = 0.0;
  double peak_flops_fp8 = 0.0;
  std::uint64_t memory_capacity_bytes = 0;
  double launch_overhead_s_direct = 0.0;
  double launch_overhead_s_lowrank = 0.0;

  // fp64 maps to the fp32 peak (the direct_fp32 analog).
  double peak_flops(Precision p) const;

  friend bool operator==(const HardwareProfile&, const HardwareProfile&) = default;
};

// Positive finite quantities, non-negative overheads, peaks non-decreasing
// fp32 -> fp16 -> fp8. Throws InvalidArgument naming the offending field.
void validate(const HardwareProfile& profile);

// `key = value` text, one field per line, '#' starts a comment. Every field
// is required exactly once; unknown keys are rejected.
HardwareProfile parse_profile(std::string_view text);
HardwareProfile load_profile(const std::filesystem::path& path);

// Canonical form: fields in declaration order, `key = value`, numbers in
// shortest round-trip notation. parse_profile(serialize_profile(p)) == p.
std::string serialize_profile(const HardwareProfile& profile);

// Directory holding the shipped rtx4090 / h200 / b200 profiles. The
// LRGEMM_PROFILE_DIR environment variable overrides the build-time default.
std::filesystem::path default_profile_dir();

// Loads `<default_profile_dir()>/<name>.profile`.
HardwareProfile shipped_profile(std::string_view name);

// Resolves a CLI/config reference: an existing file path, else a shipped name.
HardwareProfile resolve_profile(std::string_view name_or_path);

class ProfileRegistry {
 public:
  // Loads every *.profile file in `dir` (sorted by file name).
  static ProfileRegistry load_directory(const std::filesystem::path& dir);

  // Throws InvalidArgument on a duplicate name.
  void add(HardwareProfile profile, std::filesystem::path source = {});

  const HardwareProfile& at(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;
  const std::vector<std::filesystem::path>& source_paths() const noexcept { return sources_; }

 private:
  std::map<std::string, HardwareProfile, std::less<>> profiles_;
  std::vector<std::filesystem::path> sources_;
};

}  // namespace lrgemm
