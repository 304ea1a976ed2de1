#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lrgemm {

// Grid the stored values were last rounded to. Storage is always double.
enum class Precision : std::uint8_t { fp64 = 0, fp32 = 1, fp16 = 2, fp8 = 3 };

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view text);

// Row-major dense matrix of doubles.
//
// Invariants enforced at construction: rows, cols > 0; data.size() == rows*cols;
// every element finite; for fp32/fp16 tags every element lies on that grid.
// The fp8 tag marks values on a *scaled* FP8 grid; membership depends on the
// per-tensor scale and is checked by the fp8 module.
class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols, Precision tag = Precision::fp64);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data,
              Precision tag = Precision::fp64);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> values);
  // Nested initializer for small literals in tests and examples.
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  Precision precision() const noexcept { return tag_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  DenseMatrix transposed() const;

  // Re-tags after checking grid membership (fp32/fp16); throws InvalidArgument.
  void set_precision(Precision tag);

  std::string shape_string() const;

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.tag_ == b.tag_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  Precision tag_;
};

// Exact product in double with k-ascending accumulation per output element.
// Bit-reproducible; `threads` > 1 partitions output rows only, which leaves
// every element's accumulation order (and therefore the result) unchanged.
DenseMatrix matmul_reference(const DenseMatrix& a, const DenseMatrix& b, unsigned threads = 1);

double frobenius_norm(const DenseMatrix& a);

// ||approx - exact||_F / ||exact||_F. Throws on shape mismatch or zero-norm exact.
double relative_error(const DenseMatrix& approx, const DenseMatrix& exact);

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);

// Seeded standard normal stream: std::mt19937_64 feeding 53-bit uniforms into
// the Box-Muller transform. Both pieces are fixed here because
// std::normal_distribution is implementation-defined; mt19937_64 output is
// specified bit-for-bit by the standard.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double next();

 private:
  double uniform_open();  // (0, 1)

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

// Orthonormal basis of the column space of `a` (rows >= cols) via Householder QR.
DenseMatrix orthonormalize_columns(const DenseMatrix& a);

struct SpectrumSpec {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<double> singular_values;  // non-increasing, >= 0, length <= min(m, n)
  std::uint64_t seed = 0;
};

void validate(const SpectrumSpec& spec);

// Left and right singular bases used by synth_matrix for a given spec.
struct SyntheticBases {
  DenseMatrix u;  // m x l, orthonormal columns
  DenseMatrix v;  // n x l, orthonormal columns
};

SyntheticBases synth_bases(std::size_t m, std::size_t n, std::size_t l, std::uint64_t seed);

// A = U diag(sigma) V^T with U, V from synth_bases(m, n, len(sigma), seed).
DenseMatrix synth_matrix(const SpectrumSpec& spec);

// U diag(sigma) V^T for caller-provided bases (columns beyond len(sigma) ignored).
DenseMatrix compose_from_bases(const DenseMatrix& u, std::span<const double> sigma,
                               const DenseMatrix& v);

}  // namespace lrgemm
