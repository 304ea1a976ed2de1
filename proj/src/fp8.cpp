#include "lrgemm/fp8.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lrgemm/error.hpp"

namespace lrgemm {

const Fp8Format& e4m3() {
  static const Fp8Format format{4, 3, 448.0, "e4m3", false};
  return format;
}

const Fp8Format& e5m2() {
  static const Fp8Format format{5, 2, 57344.0, "e5m2", true};
  return format;
}

const Fp8Format& parse_fp8_format(std::string_view name) {
  if (name == "e4m3") return e4m3();
  if (name == "e5m2") return e5m2();
  throw InvalidArgument("unknown FP8 format '" + std::string(name) + "' (expected e4m3 or e5m2)");
}

double derived_max_finite(int exponent_bits, int mantissa_bits, bool ieee_specials) {
  const int bias = (1 << (exponent_bits - 1)) - 1;
  const int all_ones = (1 << exponent_bits) - 1;
  const double mantissa_max = static_cast<double>((1 << mantissa_bits) - 1);
  if (ieee_specials) {
    // Largest exponent field below the Inf/NaN one, full mantissa.
    return std::ldexp(1.0 + mantissa_max / (1 << mantissa_bits), all_ones - 1 - bias);
  }
  // All-ones exponent is finite except for the all-ones mantissa (NaN).
  return std::ldexp(1.0 + (mantissa_max - 1.0) / (1 << mantissa_bits), all_ones - bias);
}

void validate(const Fp8Format& format) {
  if (format.exponent_bits < 1 || format.mantissa_bits < 0 ||
      format.exponent_bits + format.mantissa_bits != 7) {
    throw InvalidArgument("FP8 format needs exponent_bits + mantissa_bits == 7");
  }
  if (format.max_finite != derived_max_finite(format.exponent_bits, format.mantissa_bits,
                                              format.ieee_specials)) {
    throw InvalidArgument("FP8 format '" + format.name + "' max_finite inconsistent with its layout");
  }
}

std::optional<double> decode(std::uint8_t code, const Fp8Format& format) {
  const int m_bits = format.mantissa_bits;
  const int all_ones = (1 << format.exponent_bits) - 1;
  const int mantissa_mask = (1 << m_bits) - 1;
  const bool negative = (code & 0x80) != 0;
  const int exponent_field = (code >> m_bits) & all_ones;
  const int mantissa = code & mantissa_mask;

  if (format.ieee_specials && exponent_field == all_ones) return std::nullopt;
  if (!format.ieee_specials && exponent_field == all_ones && mantissa == mantissa_mask) {
    return std::nullopt;
  }
  double magnitude;
  if (exponent_field == 0) {
    magnitude = std::ldexp(static_cast<double>(mantissa), 1 - format.bias() - m_bits);
  } else {
    magnitude = std::ldexp(1.0 + static_cast<double>(mantissa) / (1 << m_bits),
                           exponent_field - format.bias());
  }
  return negative ? -magnitude : magnitude;
}

std::uint8_t encode(double value, const Fp8Format& format) {
  if (!std::isfinite(value)) throw InvalidArgument("cannot encode a non-finite value as FP8");
  const std::uint8_t sign = std::signbit(value) ? 0x80 : 0x00;
  const double rounded = round_to_grid(value, format.grid(), Overflow::saturate);
  const double magnitude = std::abs(rounded);
  if (magnitude == 0.0) return sign;

  const int m_bits = format.mantissa_bits;
  int e = 0;
  std::frexp(magnitude, &e);
  const int exponent = e - 1;
  const int min_exponent = 1 - format.bias();
  int exponent_field;
  int mantissa;
  if (exponent < min_exponent) {
    exponent_field = 0;
    mantissa = static_cast<int>(std::ldexp(magnitude, -(min_exponent - m_bits)));
  } else {
    exponent_field = exponent + format.bias();
    mantissa = static_cast<int>(std::ldexp(magnitude, -(exponent - m_bits))) - (1 << m_bits);
  }
  return static_cast<std::uint8_t>(sign | (exponent_field << m_bits) | mantissa);
}

void validate(const Fp8Tensor& tensor) {
  if (tensor.rows == 0 || tensor.cols == 0 || tensor.codes.size() != tensor.rows * tensor.cols) {
    throw DimensionError("FP8 tensor code count does not match its shape");
  }
  if (!(tensor.scale > 0.0) || !std::isfinite(tensor.scale)) {
    throw InvalidArgument("FP8 tensor scale must be positive and finite");
  }
  for (std::uint8_t c : tensor.codes) {
    if (!decode(c, tensor.format)) throw InvalidArgument("FP8 tensor holds an Inf/NaN code");
  }
}

Fp8Tensor quantize(const DenseMatrix& a, const Fp8Format& format) {
  double absmax = 0.0;
  for (double v : a.data()) {
    if (!std::isfinite(v)) throw InvalidArgument("quantize: non-finite input");
    absmax = std::max(absmax, std::abs(v));
  }
  Fp8Tensor q;
  q.rows = a.rows();
  q.cols = a.cols();
  q.format = format;
  q.scale = absmax == 0.0 ? 1.0 : absmax / format.max_finite;
  q.codes.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) q.codes[i] = encode(a.data()[i] / q.scale, format);
  return q;
}

namespace {

std::array<double, 256> decode_table(const Fp8Format& format) {
  std::array<double, 256> table{};
  for (int c = 0; c < 256; ++c) table[c] = decode(static_cast<std::uint8_t>(c), format).value_or(0.0);
  return table;
}

}  // namespace

DenseMatrix decoded_grid_values(const Fp8Tensor& q) {
  validate(q);
  const auto table = decode_table(q.format);
  std::vector<double> data(q.codes.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = table[q.codes[i]];
  return DenseMatrix(q.rows, q.cols, std::move(data), Precision::fp8);
}

DenseMatrix dequantize(const Fp8Tensor& q) {
  validate(q);
  const auto table = decode_table(q.format);
  std::vector<double> data(q.codes.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = table[q.codes[i]] * q.scale;
  return DenseMatrix(q.rows, q.cols, std::move(data), Precision::fp8);
}

Fp8Tensor from_grid_values(const DenseMatrix& grid_values, double scale, const Fp8Format& format) {
  Fp8Tensor q;
  q.rows = grid_values.rows();
  q.cols = grid_values.cols();
  q.scale = scale;
  q.format = format;
  q.codes.resize(grid_values.size());
  for (std::size_t i = 0; i < q.codes.size(); ++i) {
    const double v = grid_values.data()[i];
    if (std::abs(v) > format.max_finite ||
        round_to_grid(v, format.grid(), Overflow::saturate) != v) {
      throw InvalidArgument("value " + std::to_string(v) + " is not on the " + format.name + " grid");
    }
    q.codes[i] = encode(v, format);
  }
  validate(q);
  return q;
}

double product_prescale(const Fp8Format& format) {
  // Smallest power-of-two reduction per operand that keeps max_finite^2 under
  // the FP16 maximum.
  int shift = 0;
  while (std::ldexp(format.max_finite, -shift) * std::ldexp(format.max_finite, -shift) >
         kFp16Grid.max_finite) {
    ++shift;
  }
  return std::ldexp(1.0, -shift);
}

DenseMatrix fp8_gemm(const Fp8Tensor& qa, const Fp8Tensor& qb) {
  if (qa.cols != qb.rows) {
    throw DimensionError("fp8_gemm: cannot multiply " + std::to_string(qa.rows) + "x" +
                         std::to_string(qa.cols) + " by " + std::to_string(qb.rows) + "x" +
                         std::to_string(qb.cols));
  }
  validate(qa);
  validate(qb);
  const double pa = product_prescale(qa.format);
  const double pb = product_prescale(qb.format);
  const auto ta = decode_table(qa.format);
  const auto tb = decode_table(qb.format);

  // Every product of two codes, already on the FP16 grid.
  std::vector<float> products(256 * 256);
  for (int x = 0; x < 256; ++x)
    for (int y = 0; y < 256; ++y)
      products[x * 256 + y] = static_cast<float>(round_to_fp16((ta[x] * pa) * (tb[y] * pb)));

  const std::size_t m = qa.rows, kk = qa.cols, n = qb.cols;
  const double out_scale = qa.scale * qb.scale / (pa * pb);
  std::vector<double> out(m * n);
  std::vector<float> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (std::size_t k = 0; k < kk; ++k) {
      const float* row = products.data() + qa.codes[i * kk + k] * 256;
      const std::uint8_t* bcodes = qb.codes.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) acc[j] += row[bcodes[j]];
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double v = round_to_fp32(static_cast<double>(acc[j]) * out_scale);
      if (!std::isfinite(v)) throw InvalidArgument("fp8_gemm: result overflows FP32");
      out[i * n + j] = v;
    }
  }
  return DenseMatrix(m, n, std::move(out), Precision::fp32);
}

ComputePrecision resolve_precision(ComputePrecision requested, bool fp8_available,
                                   bool fp16_available) {
  if (requested == ComputePrecision::fp8 && !fp8_available) requested = ComputePrecision::fp16;
  if (requested == ComputePrecision::fp16 && !fp16_available) requested = ComputePrecision::fp32;
  return requested;
}

}  // namespace lrgemm
