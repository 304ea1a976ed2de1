#include "lrgemm/matrix.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "lrgemm/error.hpp"
#include "lrgemm/float_grid.hpp"

namespace lrgemm {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_grid(std::span<const double> values, Precision tag) {
  if (tag != Precision::fp32 && tag != Precision::fp16) return;
  const FloatGrid& grid = tag == Precision::fp32 ? kFp32Grid : kFp16Grid;
  for (double v : values) {
    if (!on_grid(v, grid)) {
      throw InvalidArgument("element " + std::to_string(v) + " is not on the " +
                            std::string(to_string(tag)) + " grid");
    }
  }
}

// Rows [begin, end) of a * b, k ascending for each output element.
void matmul_rows(const DenseMatrix& a, const DenseMatrix& b, std::span<double> out,
                 std::size_t begin, std::size_t end) {
  const std::size_t kk = a.cols();
  const std::size_t n = b.cols();
  for (std::size_t i = begin; i < end; ++i) {
    double* c = out.data() + i * n;
    for (std::size_t k = 0; k < kk; ++k) {
      const double aik = a(i, k);
      const double* brow = b.data().data() + k * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += aik * brow[j];
    }
  }
}

}  // namespace

std::string_view to_string(Precision p) {
  switch (p) {
    case Precision::fp64: return "fp64";
    case Precision::fp32: return "fp32";
    case Precision::fp16: return "fp16";
    case Precision::fp8: return "fp8";
  }
  return "?";
}

Precision parse_precision(std::string_view text) {
  if (text == "fp64") return Precision::fp64;
  if (text == "fp32") return Precision::fp32;
  if (text == "fp16") return Precision::fp16;
  if (text == "fp8") return Precision::fp8;
  throw InvalidArgument("unknown precision '" + std::string(text) + "'");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, Precision tag)
    : DenseMatrix(rows, cols, std::vector<double>(rows * cols, 0.0), tag) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                         Precision tag)
    : rows_(rows), cols_(cols), data_(std::move(data)), tag_(tag) {
  if (rows_ == 0 || cols_ == 0) {
    throw DimensionError("matrix dimensions must be positive, got " + shape_string());
  }
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("data length " + std::to_string(data_.size()) + " does not match " +
                         shape_string());
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw InvalidArgument("matrix elements must be finite");
  }
  check_grid(data_, tag_);
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> values) {
  DenseMatrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged row literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_, tag_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

void DenseMatrix::set_precision(Precision tag) {
  check_grid(data_, tag);
  tag_ = tag;
}

std::string DenseMatrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

DenseMatrix matmul_reference(const DenseMatrix& a, const DenseMatrix& b, unsigned threads) {
  if (a.cols() != b.rows()) {
    throw DimensionError("cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  std::vector<double> out(a.rows() * b.cols(), 0.0);
  const std::size_t m = a.rows();
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(m)));
  if (workers == 1) {
    matmul_rows(a, b, out, 0, m);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (m + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(m, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] { matmul_rows(a, b, out, begin, end); });
    }
  }
  return DenseMatrix(a.rows(), b.cols(), std::move(out));
}

double frobenius_norm(const DenseMatrix& a) {
  // Scaled sum of squares keeps tiny and huge entries from under/overflowing.
  double scale = 0.0;
  double ssq = 1.0;
  for (double v : a.data()) {
    if (v == 0.0) continue;
    const double av = std::abs(v);
    if (scale < av) {
      ssq = 1.0 + ssq * (scale / av) * (scale / av);
      scale = av;
    } else {
      ssq += (av / scale) * (av / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("shape mismatch: " + a.shape_string() + " vs " + b.shape_string());
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return DenseMatrix(a.rows(), a.cols(), std::move(out));
}

double relative_error(const DenseMatrix& approx, const DenseMatrix& exact) {
  if (approx.rows() != exact.rows() || approx.cols() != exact.cols()) {
    throw DimensionError("relative_error shape mismatch: " + approx.shape_string() + " vs " +
                         exact.shape_string());
  }
  const double denom = frobenius_norm(exact);
  if (denom == 0.0) throw InvalidArgument("relative_error: reference matrix has zero norm");
  return frobenius_norm(subtract(approx, exact)) / denom;
}

double NormalStream::uniform_open() {
  // 53 random bits centred in their bucket: never exactly 0 or 1.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double NormalStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform_open();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  NormalStream stream(seed);
  std::vector<double> data(rows * cols);
  for (double& v : data) v = stream.next();
  return DenseMatrix(rows, cols, std::move(data));
}

DenseMatrix orthonormalize_columns(const DenseMatrix& a) {
  if (a.rows() < a.cols()) {
    throw DimensionError("orthonormalize_columns needs rows >= cols, got " + a.shape_string());
  }
  Eigen::Map<const RowMajor> map(a.data().data(), static_cast<Eigen::Index>(a.rows()),
                                 static_cast<Eigen::Index>(a.cols()));
  Eigen::HouseholderQR<RowMajor> qr(map);
  RowMajor q = qr.householderQ() * RowMajor::Identity(map.rows(), map.cols());
  return DenseMatrix(a.rows(), a.cols(), std::vector<double>(q.data(), q.data() + q.size()));
}

void validate(const SpectrumSpec& spec) {
  if (spec.m == 0 || spec.n == 0) throw InvalidArgument("spectrum spec needs m, n > 0");
  if (spec.singular_values.size() > std::min(spec.m, spec.n)) {
    throw InvalidArgument("spectrum has " + std::to_string(spec.singular_values.size()) +
                          " values but min(m, n) = " + std::to_string(std::min(spec.m, spec.n)));
  }
  for (std::size_t j = 0; j < spec.singular_values.size(); ++j) {
    const double s = spec.singular_values[j];
    if (!std::isfinite(s) || s < 0.0) throw InvalidArgument("singular values must be finite and >= 0");
    if (j > 0 && s > spec.singular_values[j - 1]) {
      throw InvalidArgument("singular values must be non-increasing");
    }
  }
}

SyntheticBases synth_bases(std::size_t m, std::size_t n, std::size_t l, std::uint64_t seed) {
  // One stream: the m x l draw for U first, then the n x l draw for V.
  NormalStream stream(seed);
  std::vector<double> gu(m * l), gv(n * l);
  for (double& v : gu) v = stream.next();
  for (double& v : gv) v = stream.next();
  return {orthonormalize_columns(DenseMatrix(m, l, std::move(gu))),
          orthonormalize_columns(DenseMatrix(n, l, std::move(gv)))};
}

DenseMatrix compose_from_bases(const DenseMatrix& u, std::span<const double> sigma,
                               const DenseMatrix& v) {
  const std::size_t l = sigma.size();
  if (u.cols() < l || v.cols() < l) throw DimensionError("bases narrower than the spectrum");
  const std::size_t m = u.rows();
  const std::size_t n = v.rows();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* c = out.data() + i * n;
    for (std::size_t p = 0; p < l; ++p) {
      const double w = u(i, p) * sigma[p];
      if (w == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c[j] += w * v(j, p);
    }
  }
  return DenseMatrix(m, n, std::move(out));
}

DenseMatrix synth_matrix(const SpectrumSpec& spec) {
  validate(spec);
  const std::size_t l = spec.singular_values.size();
  if (l == 0) return DenseMatrix(spec.m, spec.n);
  const SyntheticBases bases = synth_bases(spec.m, spec.n, l, spec.seed);
  return compose_from_bases(bases.u, spec.singular_values, bases.v);
}

}  // namespace lrgemm
