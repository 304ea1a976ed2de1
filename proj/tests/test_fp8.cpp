#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lrgemm/error.hpp"
#include "lrgemm/float_grid.hpp"
#include "lrgemm/fp8.hpp"
#include "test_util.hpp"

using namespace lrgemm;

namespace {

// Value of a code computed straight from the bit fields, independent of decode().
double bitfield_value(std::uint8_t code, int e_bits, int m_bits) {
  const int bias = (1 << (e_bits - 1)) - 1;
  const int e = (code >> m_bits) & ((1 << e_bits) - 1);
  const int m = code & ((1 << m_bits) - 1);
  const double mag = e == 0 ? m * std::pow(2.0, 1 - bias - m_bits)
                            : (1.0 + m / std::pow(2.0, m_bits)) * std::pow(2.0, e - bias);
  return (code & 0x80) ? -mag : mag;
}

}  // namespace

TEST(Fp8Format, MaxFiniteFromLayout) {
  EXPECT_EQ(derived_max_finite(4, 3, false), 448.0);
  EXPECT_EQ(derived_max_finite(5, 2, true), 57344.0);
  EXPECT_NO_THROW(validate(e4m3()));
  EXPECT_NO_THROW(validate(e5m2()));
  Fp8Format bad = e4m3();
  bad.max_finite = 480.0;
  EXPECT_THROW(validate(bad), InvalidArgument);
  bad = e4m3();
  bad.mantissa_bits = 4;
  EXPECT_THROW(validate(bad), InvalidArgument);
  EXPECT_EQ(parse_fp8_format("e5m2"), e5m2());
  EXPECT_THROW(parse_fp8_format("e3m4"), InvalidArgument);
}

TEST(Fp8Codes, E4m3SpecialCodes) {
  EXPECT_FALSE(decode(0x7F, e4m3()));
  EXPECT_FALSE(decode(0xFF, e4m3()));
  EXPECT_EQ(*decode(0x7E, e4m3()), 448.0);
  EXPECT_EQ(*decode(0x38, e4m3()), 1.0);
  EXPECT_EQ(*decode(0x01, e4m3()), std::ldexp(1.0, -9));
  EXPECT_EQ(*decode(0x08, e4m3()), std::ldexp(1.0, -6));
}

TEST(Fp8Codes, E5m2SpecialCodes) {
  for (int c : {0x7C, 0x7D, 0x7E, 0x7F, 0xFC, 0xFF}) EXPECT_FALSE(decode(static_cast<std::uint8_t>(c), e5m2()));
  EXPECT_EQ(*decode(0x7B, e5m2()), 57344.0);
  EXPECT_EQ(*decode(0x3C, e5m2()), 1.0);
  EXPECT_EQ(*decode(0x01, e5m2()), std::ldexp(1.0, -16));
}

TEST(Fp8Codes, ExhaustiveDecodeEncodeFixedPoint) {
  for (const Fp8Format* f : {&e4m3(), &e5m2()}) {
    int finite = 0;
    for (int c = 0; c < 256; ++c) {
      const auto code = static_cast<std::uint8_t>(c);
      const auto v = decode(code, *f);
      if (!v) continue;
      ++finite;
      EXPECT_EQ(*v, bitfield_value(code, f->exponent_bits, f->mantissa_bits)) << f->name << " " << c;
      EXPECT_EQ(encode(*v, *f), code) << f->name << " code " << c;
    }
    EXPECT_EQ(finite, f->ieee_specials ? 248 : 254) << f->name;
  }
}

TEST(Fp8Encode, RoundsToNearestEven) {
  // E4M3 spacing at 1 is 1/8.
  EXPECT_EQ(*decode(encode(1.0625, e4m3()), e4m3()), 1.0);
  EXPECT_EQ(*decode(encode(1.1875, e4m3()), e4m3()), 1.25);
  EXPECT_EQ(*decode(encode(1.07, e4m3()), e4m3()), 1.125);
  // Subnormal tie between 0 and 2^-9 goes to 0.
  EXPECT_EQ(*decode(encode(std::ldexp(1.0, -10), e4m3()), e4m3()), 0.0);
  EXPECT_EQ(*decode(encode(-std::ldexp(3.0, -10), e4m3()), e4m3()), -std::ldexp(1.0, -8));
}

TEST(Fp8Encode, SaturatesAndKeepsNegativeZero) {
  EXPECT_EQ(encode(1e6, e4m3()), 0x7E);
  EXPECT_EQ(encode(-1e6, e4m3()), 0xFE);
  EXPECT_EQ(encode(464.0, e4m3()), 0x7E);
  EXPECT_EQ(encode(1e9, e5m2()), 0x7B);
  EXPECT_EQ(encode(-0.0, e4m3()), 0x80);
  EXPECT_THROW(encode(NAN, e4m3()), InvalidArgument);
}

TEST(Quantize, ZeroMatrix) {
  const auto q = quantize(DenseMatrix(2, 2));
  EXPECT_EQ(q.scale, 1.0);
  for (auto c : q.codes) EXPECT_EQ(c, 0);
  EXPECT_EQ(dequantize(q), DenseMatrix(2, 2, Precision::fp8));
}

TEST(Quantize, GridPointsWithFullRangeAreFixed) {
  const auto a = DenseMatrix::from_rows({{448, -1.5, 0.125}, {std::ldexp(1.0, -9), 240, -448}});
  const auto q = quantize(a);
  EXPECT_EQ(q.scale, 1.0);
  const auto back = dequantize(q);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(back.data()[i], a.data()[i]);
  EXPECT_EQ(back.precision(), Precision::fp8);
}

TEST(Quantize, SingleElementRoundTrips) {
  const auto q = quantize(DenseMatrix::from_rows({{1.0}}));
  EXPECT_EQ(q.scale, 1.0 / 448.0);
  EXPECT_EQ(q.codes[0], 0x7E);
  EXPECT_EQ(dequantize(q)(0, 0), 448.0 * (1.0 / 448.0));
}

TEST(Quantize, MaxCodeDecodesToMaxTimesScale) {
  Fp8Tensor q{1, 1, {0x7E}, 0.25, e4m3()};
  EXPECT_EQ(dequantize(q)(0, 0), 112.0);
}

TEST(Quantize, RelativeErrorBoundInNormalRange) {
  for (const Fp8Format* f : {&e4m3(), &e5m2()}) {
    const double u = std::ldexp(1.0, -(f->mantissa_bits + 1));
    const double bound = u / (1.0 - u);
    const double min_normal = std::ldexp(1.0, 1 - f->bias());
    std::mt19937_64 rng(99);
    for (int t = 0; t < 1000; ++t) {
      // Log-uniform magnitudes across ~12 binades so the normal range is well covered.
      std::uniform_real_distribution<double> expo(-8.0, 4.0), sign(-1.0, 1.0);
      std::vector<double> data(16);
      for (auto& v : data) v = std::copysign(std::exp2(expo(rng)), sign(rng));
      const DenseMatrix a(4, 4, data);
      const auto q = quantize(a, *f);
      const auto back = dequantize(q);
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (std::abs(data[i]) / q.scale < min_normal) continue;
        EXPECT_LE(std::abs(back.data()[i] - data[i]) / std::abs(data[i]), bound) << f->name;
      }
    }
  }
}

TEST(Quantize, IdempotentThroughOneRoundTrip) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto a = testutil::uniform_matrix(6, 5, seed, -3.0, 7.0);
    const auto q1 = quantize(a);
    const auto q2 = quantize(dequantize(q1));
    EXPECT_EQ(q1.codes, q2.codes);
    // fl(fl(448 s) / 448) can move the scale by one ulp.
    EXPECT_LE(std::abs(q1.scale - q2.scale), std::nextafter(q1.scale, INFINITY) - q1.scale);
  }
}

TEST(Quantize, ScaleIsHomogeneous) {
  const auto a = testutil::uniform_matrix(5, 5, 3);
  const double s = quantize(a).scale;
  std::vector<double> scaled(a.data().begin(), a.data().end());
  for (auto& v : scaled) v *= 4.0;
  EXPECT_EQ(quantize(DenseMatrix(5, 5, scaled)).scale, 4.0 * s);
  for (auto& v : scaled) v *= 0.75;
  EXPECT_NEAR(quantize(DenseMatrix(5, 5, scaled)).scale, 3.0 * s, 1e-15 * s);
}

TEST(Fp8Tensor, ValidateRejectsBadTensors) {
  EXPECT_THROW(validate(Fp8Tensor{1, 1, {0x7F}, 1.0, e4m3()}), InvalidArgument);
  EXPECT_THROW(validate(Fp8Tensor{1, 1, {0x00}, 0.0, e4m3()}), InvalidArgument);
  EXPECT_THROW(validate(Fp8Tensor{1, 2, {0x00}, 1.0, e4m3()}), DimensionError);
  EXPECT_THROW(from_grid_values(DenseMatrix::from_rows({{1.1}}), 1.0, e4m3()), InvalidArgument);
}

TEST(Fp8Gemm, IdentityIsExact) {
  const auto q = quantize(DenseMatrix::identity(5));
  const auto c = fp8_gemm(q, q);
  EXPECT_EQ(c.precision(), Precision::fp32);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(c(i, j), i == j ? 1.0 : 0.0);
}

TEST(Fp8Gemm, ZeroTimesAnything) {
  const auto c = fp8_gemm(quantize(DenseMatrix(3, 4)), quantize(testutil::uniform_matrix(4, 2, 5)));
  for (double v : c.data()) EXPECT_EQ(v, 0.0);
}

TEST(Fp8Gemm, DimensionMismatch) {
  EXPECT_THROW(fp8_gemm(quantize(DenseMatrix(2, 3)), quantize(DenseMatrix(2, 3))), DimensionError);
}

TEST(Fp8Gemm, UniformOperandsWithinEmpiricalBound) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto a = testutil::uniform_matrix(64, 64, 2 * seed);
    const auto b = testutil::uniform_matrix(64, 64, 2 * seed + 1);
    worst = std::max(worst, relative_error(fp8_gemm(quantize(a), quantize(b)), matmul_reference(a, b)));
  }
  EXPECT_LE(worst, 0.04);
}

TEST(Fp8Gemm, StagedOracleBound) {
  // fp8_gemm against the exact product of the dequantized operands: each
  // product carries at most one FP16 rounding (2^-11) and each of the k adds
  // plus the final scaling one FP32 rounding (2^-24), all relative to sum |a b|.
  for (const Fp8Format* f : {&e4m3(), &e5m2()}) {
    for (std::size_t n : {8u, 32u, 128u}) {
      const auto qa = quantize(testutil::uniform_matrix(n, n, n, -2, 2), *f);
      const auto qb = quantize(testutil::uniform_matrix(n, n, n + 1, -2, 2), *f);
      const auto da = dequantize(qa), db = dequantize(qb);
      const auto exact = matmul_reference(da, db);
      const auto got = fp8_gemm(qa, qb);
      const double per = std::ldexp(1.0, -11) + static_cast<double>(n + 1) * std::ldexp(1.0, -24);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double mass = 0.0;
          for (std::size_t k = 0; k < n; ++k) mass += std::abs(da(i, k) * db(k, j));
          // E5M2 prescale pushes the smallest products into FP16 subnormals.
          const double floor = f->ieee_specials ? n * std::ldexp(1.0, -25) * qa.scale * qb.scale * 65536.0 : 0.0;
          EXPECT_LE(std::abs(got(i, j) - exact(i, j)), 1.01 * per * mass + floor) << f->name << " n=" << n;
        }
    }
  }
}

TEST(Fp8Gemm, E4m3ProductsAreExactOnFp16Grid) {
  const double p = product_prescale(e4m3());
  EXPECT_EQ(p, 0.5);
  for (int x = 0; x < 256; ++x)
    for (int y = 0; y < 256; ++y) {
      const auto a = decode(static_cast<std::uint8_t>(x), e4m3());
      const auto b = decode(static_cast<std::uint8_t>(y), e4m3());
      if (!a || !b) continue;
      const double prod = (*a * p) * (*b * p);
      if (std::abs(prod) >= std::ldexp(1.0, -14)) EXPECT_TRUE(on_grid(prod, kFp16Grid)) << x << " " << y;
    }
  EXPECT_EQ(product_prescale(e5m2()), std::ldexp(1.0, -8));
}

TEST(ResolvePrecision, FallbackChain) {
  EXPECT_EQ(resolve_precision(ComputePrecision::fp8), ComputePrecision::fp8);
  EXPECT_EQ(resolve_precision(ComputePrecision::fp8, false), ComputePrecision::fp16);
  EXPECT_EQ(resolve_precision(ComputePrecision::fp8, false, false), ComputePrecision::fp32);
  EXPECT_EQ(resolve_precision(ComputePrecision::fp16, true, false), ComputePrecision::fp32);
  EXPECT_EQ(resolve_precision(ComputePrecision::fp32, false, false), ComputePrecision::fp32);
}

TEST(FloatGrid, Fp16RoundingMatchesKnownValues) {
  EXPECT_EQ(round_to_fp16(1.0 + std::ldexp(1.0, -11)), 1.0);
  EXPECT_EQ(round_to_fp16(1.0 + 3 * std::ldexp(1.0, -11)), 1.0 + std::ldexp(1.0, -9));
  EXPECT_EQ(round_to_fp16(65504.0), 65504.0);
  EXPECT_TRUE(std::isinf(round_to_fp16(65520.0)));
  EXPECT_EQ(round_to_fp16(std::ldexp(1.0, -25)), 0.0);
  EXPECT_EQ(round_to_fp16(std::ldexp(3.0, -26)), std::ldexp(1.0, -24));
}
