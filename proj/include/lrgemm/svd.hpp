#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lrgemm/matrix.hpp"

namespace lrgemm {

// Truncated singular triple. u is m x r with orthonormal columns, vt is r x n
// with orthonormal rows, s holds r positive values in non-increasing order.
struct SvdFactors {
  DenseMatrix u;
  std::vector<double> s;
  DenseMatrix vt;

  std::size_t rank() const noexcept { return s.size(); }
  std::size_t rows() const noexcept { return u.rows(); }
  std::size_t cols() const noexcept { return vt.cols(); }
};

// Checks shapes, ordering, positivity and orthonormality (within `tol`).
void validate(const SvdFactors& f, double tol = 1e-8);

// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRelativeZeroThreshold = 1e-12;

// r = max(1, round_half_up(alpha * min(m, n))).
struct FixedFraction {
  double alpha;
};
// Smallest r whose leading energy fraction is >= tau.
struct EnergyThreshold {
  double tau;
};
// Smallest r whose relative tail norm sqrt(sum_{j>r} s^2 / sum s^2) is <= epsilon.
struct ErrorConstrained {
  double epsilon;
};
// Largest r with (m*r + r + r*n) * bytes_per_element <= memory_budget_bytes.
struct HardwareAware {
  std::uint64_t memory_budget_bytes;
  std::uint64_t bytes_per_element;
};

using RankPolicy = std::variant<FixedFraction, EnergyThreshold, ErrorConstrained, HardwareAware>;

void validate(const RankPolicy& policy);

// Textual form used by config files and the CLI:
//   fraction:<alpha> | energy:<tau> | error:<epsilon> | memory:<bytes>[:<bytes_per_element>]
RankPolicy parse_rank_policy(std::string_view text);
std::string to_string(const RankPolicy& policy);

// Energy-based policies adapt to the spectrum; the others fix r from the shape.
bool is_spectrum_adaptive(const RankPolicy& policy);

// Relative Frobenius error the policy promises for the truncated operand,
// when it promises one: sqrt(1 - tau) or epsilon.
std::optional<double> implied_error_bound(const RankPolicy& policy);

// Applies the policy to a non-increasing spectrum of an m x n matrix.
// Values below kRelativeZeroThreshold * s[0] count as zero and the result
// never exceeds the number of values above that threshold (nor min(m, n)).
// Throws InvalidArgument for an all-zero spectrum or a budget that cannot
// hold rank 1.
std::size_t select_rank(std::span<const double> singular_values, const RankPolicy& policy,
                        std::size_t m, std::size_t n);

// Rank from a policy that does not need the spectrum; nullopt for adaptive policies.
std::optional<std::size_t> shape_rank(const RankPolicy& policy, std::size_t m, std::size_t n);

// All min(m, n) singular values, non-increasing.
std::vector<double> singular_values(const DenseMatrix& a);

// Top-r factors of the full SVD. Trailing values under the zero threshold are
// dropped, so the returned rank can be below r.
SvdFactors truncated_svd(const DenseMatrix& a, std::size_t r);

// Halko-style randomized SVD: Gaussian sketch of width r + oversample,
// `power_iters` rounds of (A A^T) with re-orthonormalization after each
// application, exact SVD of the projected matrix, truncation to r.
// Deterministic given `seed`.
SvdFactors randomized_svd(const DenseMatrix& a, std::size_t r, std::size_t oversample,
                          std::size_t power_iters, std::uint64_t seed);

inline constexpr std::size_t kDefaultOversample = 8;
inline constexpr std::size_t kDefaultPowerIters = 2;
inline constexpr std::size_t kInitialSketchWidth = 16;

enum class SvdMethod { exact, randomized };

std::string_view to_string(SvdMethod method);
SvdMethod parse_svd_method(std::string_view text);

// Computes the spectrum, applies the policy and returns the truncated factors.
//
// For the randomized method and spectrum-adaptive policies the sketch width
// starts at kInitialSketchWidth and doubles until the captured energy meets
// the policy (or the width reaches min(m, n), where the exact SVD takes
// over); the minimal rank is then found by binary search over the captured
// spectrum. Residual energy is measured exactly as ||A||_F^2 - sum(captured^2).
SvdFactors decompose(const DenseMatrix& a, const RankPolicy& policy,
                     SvdMethod method = SvdMethod::exact, std::uint64_t seed = 0);

// u * diag(s) * vt.
DenseMatrix reconstruct(const SvdFactors& f);

// First r triplets of `f` (r <= f.rank()).
SvdFactors truncate(const SvdFactors& f, std::size_t r);

}  // namespace lrgemm
