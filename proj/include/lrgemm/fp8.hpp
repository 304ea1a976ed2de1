#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrgemm/float_grid.hpp"
#include "lrgemm/matrix.hpp"

namespace lrgemm {

// 8-bit float layout: 1 sign bit, `exponent_bits` + `mantissa_bits` == 7.
//
// `ieee_specials` selects the encoding convention. With it, the all-ones
// exponent is reserved for Inf/NaN (E5M2). Without it only S.1111.111 is NaN
// and the all-ones exponent carries finite values (E4M3 "FN").
struct Fp8Format {
  int exponent_bits;
  int mantissa_bits;
  double max_finite;
  std::string name;
  bool ieee_specials;

  int bias() const noexcept { return (1 << (exponent_bits - 1)) - 1; }
  // Grid used for rounding scaled values (subnormals included).
  FloatGrid grid() const noexcept { return {mantissa_bits, 1 - bias(), max_finite}; }

  friend bool operator==(const Fp8Format&, const Fp8Format&) = default;
};

const Fp8Format& e4m3();
const Fp8Format& e5m2();
const Fp8Format& parse_fp8_format(std::string_view name);

// Largest finite magnitude implied by (exponent_bits, mantissa_bits, ieee_specials).
double derived_max_finite(int exponent_bits, int mantissa_bits, bool ieee_specials);
void validate(const Fp8Format& format);

// Decoded value of `code`, or nullopt for Inf/NaN codes.
std::optional<double> decode(std::uint8_t code, const Fp8Format& format);

// Round-to-nearest-even encoding of a finite value, saturating at +-max_finite.
// Never produces an Inf/NaN code. -0.0 keeps the sign bit.
std::uint8_t encode(double value, const Fp8Format& format);

struct Fp8Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> codes;
  double scale = 1.0;  // dequantized element = decode(code) * scale
  Fp8Format format = e4m3();
};

// Throws InvalidArgument if a code decodes to Inf/NaN, the scale is not
// positive and finite, or the sizes disagree.
void validate(const Fp8Tensor& tensor);

// Per-tensor absmax scaling: scale = absmax / max_finite (1 for an all-zero
// matrix); codes are encode(element / scale).
Fp8Tensor quantize(const DenseMatrix& a, const Fp8Format& format = e4m3());

// decode(code) * scale, tagged fp8.
DenseMatrix dequantize(const Fp8Tensor& q);

// Unscaled grid values decode(code), tagged fp8 (the LRGM fp8 payload).
DenseMatrix decoded_grid_values(const Fp8Tensor& q);

// Inverse of decoded_grid_values for values already on the format's grid.
Fp8Tensor from_grid_values(const DenseMatrix& grid_values, double scale, const Fp8Format& format);

// Mixed-precision product of two FP8 tensors.
//
// Decoded operands are first multiplied by an exact power of two
// (product_prescale) so that max_finite^2 fits under the FP16 maximum. Each
// scalar product is then rounded to the FP16 grid, partial sums are
// accumulated in FP32 with k ascending, and the final sum is multiplied by
// qa.scale * qb.scale / prescale^2 and rounded once more to FP32.
// Result is tagged fp32.
DenseMatrix fp8_gemm(const Fp8Tensor& qa, const Fp8Tensor& qb);

// Power of two applied to each decoded operand before FP16 products.
double product_prescale(const Fp8Format& format);

// Precision requested by a caller of a mixed-precision path. Requests for
// fp8 are honored when FP8 is available and fall back to fp16, then fp32.
// In software emulation FP8 is always available, so this is a pass-through.
enum class ComputePrecision { fp8, fp16, fp32 };

ComputePrecision resolve_precision(ComputePrecision requested, bool fp8_available = true,
                                   bool fp16_available = true);

}  // namespace lrgemm
