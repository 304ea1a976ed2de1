#pragma once

namespace lrgemm {

// A binary floating-point value grid: `mantissa_bits` explicit fraction bits,
// smallest normal exponent `min_exponent` (subnormals below it share its
// quantum), largest finite magnitude `max_finite`.
struct FloatGrid {
  int mantissa_bits;
  int min_exponent;
  double max_finite;
};

inline constexpr FloatGrid kFp32Grid{23, -126, 3.4028234663852886e38};
inline constexpr FloatGrid kFp16Grid{10, -14, 65504.0};

enum class Overflow { to_infinity, saturate };

// Round-to-nearest-even onto `grid`. Out-of-range results become +-inf or
// +-max_finite depending on `overflow`. Zero keeps its sign.
double round_to_grid(double x, const FloatGrid& grid, Overflow overflow = Overflow::to_infinity);

bool on_grid(double x, const FloatGrid& grid);

inline double round_to_fp32(double x) { return static_cast<double>(static_cast<float>(x)); }
double round_to_fp16(double x);

}  // namespace lrgemm
