#include "lrgemm/float_grid.hpp"

#include <cmath>
#include <limits>

namespace lrgemm {

double round_to_grid(double x, const FloatGrid& grid, Overflow overflow) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  int e = 0;
  std::frexp(x, &e);  // |x| = f * 2^e, f in [0.5, 1)
  const int exponent = std::max(e - 1, grid.min_exponent);
  const double quantum = std::ldexp(1.0, exponent - grid.mantissa_bits);
  // Scaling by a power of two is exact; nearbyint rounds ties to even.
  const double q = std::nearbyint(x / quantum) * quantum;
  if (std::abs(q) > grid.max_finite) {
    if (overflow == Overflow::saturate) return std::copysign(grid.max_finite, x);
    return std::copysign(std::numeric_limits<double>::infinity(), x);
  }
  return q == 0.0 ? std::copysign(0.0, x) : q;
}

bool on_grid(double x, const FloatGrid& grid) {
  if (!std::isfinite(x)) return false;
  return round_to_grid(x, grid, Overflow::to_infinity) == x;
}

double round_to_fp16(double x) { return round_to_grid(x, kFp16Grid, Overflow::to_infinity); }

}  // namespace lrgemm
