#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "lrgemm/fp8.hpp"
#include "lrgemm/matrix.hpp"
#include "lrgemm/svd.hpp"

namespace lrgemm {

// LRGM matrix container (all integers and reals little-endian):
//   "LRGM" | u16 version | u64 rows | u64 cols | u8 precision tag |
//   rows*cols f64 row-major | (fp8 tag only) f64 scale
// For the fp8 tag the payload holds the unscaled FP8 grid values; the format
// is recognized from their absmax (448 -> E4M3, 57344 -> E5M2).
//
// LRFB factor bundle:
//   "LRFB" | u16 version | u64 rank | LRGM u (m x r) | LRGM s (1 x r) | LRGM vt (r x n)
inline constexpr std::uint16_t kContainerVersion = 1;

enum class ContainerKind { matrix, factor_bundle };

struct LrgmContent {
  DenseMatrix matrix;  // dequantized values for fp8 containers
  std::optional<Fp8Tensor> fp8;
};

std::vector<std::uint8_t> encode_lrgm(const DenseMatrix& m);
std::vector<std::uint8_t> encode_lrgm(const Fp8Tensor& q);
// Decodes one container starting at `offset` and advances it.
LrgmContent decode_lrgm(std::span<const std::uint8_t> bytes, std::size_t& offset);

std::vector<std::uint8_t> encode_lrfb(const SvdFactors& f);
SvdFactors decode_lrfb(std::span<const std::uint8_t> bytes);

ContainerKind detect_container(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

void write_lrgm(const std::filesystem::path& path, const DenseMatrix& m);
void write_lrgm(const std::filesystem::path& path, const Fp8Tensor& q);
LrgmContent read_lrgm(const std::filesystem::path& path);
void write_lrfb(const std::filesystem::path& path, const SvdFactors& f);
SvdFactors read_lrfb(const std::filesystem::path& path);

}  // namespace lrgemm
