#include "lrgemm/svd.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>

#include "lrgemm/error.hpp"

namespace lrgemm {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;

ConstMap as_eigen(const DenseMatrix& m) {
  return ConstMap(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

DenseMatrix from_eigen(const RowMajor& m) {
  return DenseMatrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                     std::vector<double>(m.data(), m.data() + m.size()));
}

RowMajor orthonormal_basis(const RowMajor& y) {
  Eigen::HouseholderQR<RowMajor> qr(y);
  return qr.householderQ() * RowMajor::Identity(y.rows(), y.cols());
}

struct FullSvd {
  RowMajor u;  // m x p
  Eigen::VectorXd s;
  RowMajor v;  // n x p
};

FullSvd full_svd(const RowMajor& a, bool vectors) {
  const unsigned options = vectors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(a), options);
  if (svd.info() != Eigen::Success) {
    throw ConvergenceError("SVD did not converge on a " + std::to_string(a.rows()) + "x" +
                           std::to_string(a.cols()) + " matrix");
  }
  FullSvd out;
  out.s = svd.singularValues();
  if (vectors) {
    out.u = svd.matrixU();
    out.v = svd.matrixV();
  }
  return out;
}

// Count of leading values above the relative zero threshold.
std::size_t numerical_rank(const Eigen::VectorXd& s) {
  if (s.size() == 0 || !(s[0] > 0.0)) return 0;
  const double threshold = kRelativeZeroThreshold * s[0];
  std::size_t r = 0;
  while (r < static_cast<std::size_t>(s.size()) && s[static_cast<Eigen::Index>(r)] >= threshold) ++r;
  return r;
}

SvdFactors factors_from(const RowMajor& u, const Eigen::VectorXd& s, const RowMajor& v,
                        std::size_t r) {
  const auto rr = static_cast<Eigen::Index>(r);
  RowMajor ut = u.leftCols(rr);
  RowMajor vt = v.leftCols(rr).transpose();
  std::vector<double> sv(s.data(), s.data() + rr);
  return SvdFactors{from_eigen(ut), std::move(sv), from_eigen(vt)};
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double parse_number(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument("rank policy: bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t parse_count(std::string_view text, std::string_view what) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument("rank policy: bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Minimal r in [1, captured.size()] meeting an adaptive policy when the
// residual beyond the captured values is total - sum(captured^2).
std::optional<std::size_t> partial_rank(std::span<const double> captured, double total,
                                        const RankPolicy& policy) {
  std::vector<double> prefix(captured.size() + 1, 0.0);
  for (std::size_t j = 0; j < captured.size(); ++j) prefix[j + 1] = prefix[j] + captured[j] * captured[j];
  const auto meets = [&](std::size_t r) {
    if (const auto* e = std::get_if<EnergyThreshold>(&policy)) return prefix[r] / total >= e->tau;
    const auto& c = std::get<ErrorConstrained>(policy);
    const double residual = std::max(0.0, total - prefix[r]);
    return std::sqrt(residual) / std::sqrt(total) <= c.epsilon;
  };
  if (captured.empty() || !meets(captured.size())) return std::nullopt;
  std::size_t lo = 1, hi = captured.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (meets(mid)) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

}  // namespace

void validate(const SvdFactors& f, double tol) {
  const std::size_t r = f.rank();
  if (r == 0) throw InvalidArgument("SVD factors must have rank >= 1");
  if (f.u.cols() != r || f.vt.rows() != r) {
    throw DimensionError("SVD factor shapes disagree with rank " + std::to_string(r) + ": u " +
                         f.u.shape_string() + ", vt " + f.vt.shape_string());
  }
  for (std::size_t j = 0; j < r; ++j) {
    if (!(f.s[j] > 0.0) || !std::isfinite(f.s[j])) throw InvalidArgument("singular values must be positive");
    if (j > 0 && f.s[j] > f.s[j - 1]) throw InvalidArgument("singular values must be non-increasing");
  }
  const RowMajor u = as_eigen(f.u);
  const RowMajor vt = as_eigen(f.vt);
  const auto eye = RowMajor::Identity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  if ((u.transpose() * u - eye).cwiseAbs().maxCoeff() > tol) {
    throw InvalidArgument("u columns are not orthonormal");
  }
  if ((vt * vt.transpose() - eye).cwiseAbs().maxCoeff() > tol) {
    throw InvalidArgument("vt rows are not orthonormal");
  }
}

void validate(const RankPolicy& policy) {
  std::visit(Overloaded{
                 [](const FixedFraction& p) {
                   if (!(p.alpha > 0.0 && p.alpha <= 1.0)) throw InvalidArgument("alpha must be in (0, 1]");
                 },
                 [](const EnergyThreshold& p) {
                   if (!(p.tau > 0.0 && p.tau <= 1.0)) throw InvalidArgument("tau must be in (0, 1]");
                 },
                 [](const ErrorConstrained& p) {
                   if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon)) {
                     throw InvalidArgument("epsilon must be positive and finite");
                   }
                 },
                 [](const HardwareAware& p) {
                   if (p.memory_budget_bytes == 0 || p.bytes_per_element == 0) {
                     throw InvalidArgument("memory budget and bytes per element must be positive");
                   }
                 },
             },
             policy);
}

RankPolicy parse_rank_policy(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidArgument("rank policy '" + std::string(text) + "' must look like kind:value");
  }
  const std::string_view kind = text.substr(0, colon);
  const std::string_view rest = text.substr(colon + 1);
  RankPolicy policy;
  if (kind == "fraction") {
    policy = FixedFraction{parse_number(rest, "alpha")};
  } else if (kind == "energy") {
    policy = EnergyThreshold{parse_number(rest, "tau")};
  } else if (kind == "error") {
    policy = ErrorConstrained{parse_number(rest, "epsilon")};
  } else if (kind == "memory") {
    const auto second = rest.find(':');
    if (second == std::string_view::npos) {
      policy = HardwareAware{parse_count(rest, "budget"), 1};
    } else {
      policy = HardwareAware{parse_count(rest.substr(0, second), "budget"),
                             parse_count(rest.substr(second + 1), "bytes per element")};
    }
  } else {
    throw InvalidArgument("unknown rank policy kind '" + std::string(kind) + "'");
  }
  validate(policy);
  return policy;
}

std::string to_string(const RankPolicy& policy) {
  return std::visit(Overloaded{
                        [](const FixedFraction& p) { return "fraction:" + shortest(p.alpha); },
                        [](const EnergyThreshold& p) { return "energy:" + shortest(p.tau); },
                        [](const ErrorConstrained& p) { return "error:" + shortest(p.epsilon); },
                        [](const HardwareAware& p) {
                          return "memory:" + std::to_string(p.memory_budget_bytes) + ":" +
                                 std::to_string(p.bytes_per_element);
                        },
                    },
                    policy);
}

bool is_spectrum_adaptive(const RankPolicy& policy) {
  return std::holds_alternative<EnergyThreshold>(policy) ||
         std::holds_alternative<ErrorConstrained>(policy);
}

std::optional<double> implied_error_bound(const RankPolicy& policy) {
  if (const auto* e = std::get_if<EnergyThreshold>(&policy)) return std::sqrt(1.0 - e->tau);
  if (const auto* c = std::get_if<ErrorConstrained>(&policy)) return c->epsilon;
  return std::nullopt;
}

std::optional<std::size_t> shape_rank(const RankPolicy& policy, std::size_t m, std::size_t n) {
  validate(policy);
  const std::size_t full = std::min(m, n);
  if (const auto* f = std::get_if<FixedFraction>(&policy)) {
    const auto r = static_cast<std::size_t>(std::floor(f->alpha * static_cast<double>(full) + 0.5));
    return std::clamp<std::size_t>(r, 1, full);
  }
  if (const auto* h = std::get_if<HardwareAware>(&policy)) {
    const std::uint64_t per_rank = (static_cast<std::uint64_t>(m) + n + 1) * h->bytes_per_element;
    const std::uint64_t r = h->memory_budget_bytes / per_rank;
    if (r < 1) {
      throw InvalidArgument("memory budget of " + std::to_string(h->memory_budget_bytes) +
                            " bytes cannot hold a rank-1 factorization of a " + std::to_string(m) +
                            "x" + std::to_string(n) + " matrix (" + std::to_string(per_rank) +
                            " bytes)");
    }
    return static_cast<std::size_t>(std::min<std::uint64_t>(r, full));
  }
  return std::nullopt;
}

std::size_t select_rank(std::span<const double> sv, const RankPolicy& policy, std::size_t m,
                        std::size_t n) {
  validate(policy);
  if (sv.empty() || !(sv[0] > 0.0)) throw InvalidArgument("select_rank: spectrum is all zero");
  for (std::size_t j = 0; j < sv.size(); ++j) {
    if (!(sv[j] >= 0.0) || !std::isfinite(sv[j])) throw InvalidArgument("select_rank: invalid singular value");
    if (j > 0 && sv[j] > sv[j - 1]) throw InvalidArgument("select_rank: spectrum must be non-increasing");
  }
  const double threshold = kRelativeZeroThreshold * sv[0];
  std::size_t nonzero = 0;
  while (nonzero < sv.size() && sv[nonzero] >= threshold) ++nonzero;
  const std::size_t limit = std::min(nonzero, std::min(m, n));

  if (auto r = shape_rank(policy, m, n)) return std::min(*r, limit);

  // Energies summed with j ascending; tails summed from the smallest value up.
  double total = 0.0;
  for (std::size_t j = 0; j < limit; ++j) total += sv[j] * sv[j];

  if (const auto* e = std::get_if<EnergyThreshold>(&policy)) {
    double kept = 0.0;
    for (std::size_t r = 1; r <= limit; ++r) {
      kept += sv[r - 1] * sv[r - 1];
      if (kept / total >= e->tau) return r;
    }
    return limit;
  }

  const double epsilon = std::get<ErrorConstrained>(policy).epsilon;
  std::vector<double> tail(limit + 1, 0.0);  // tail[r] = sum_{j > r} sigma_j^2
  for (std::size_t r = limit; r-- > 0;) tail[r] = tail[r + 1] + sv[r] * sv[r];
  for (std::size_t r = 1; r <= limit; ++r) {
    if (std::sqrt(tail[r]) / std::sqrt(total) <= epsilon) return r;
  }
  return limit;
}

std::vector<double> singular_values(const DenseMatrix& a) {
  const FullSvd svd = full_svd(as_eigen(a), false);
  return std::vector<double>(svd.s.data(), svd.s.data() + svd.s.size());
}

SvdFactors truncated_svd(const DenseMatrix& a, std::size_t r) {
  const std::size_t full = std::min(a.rows(), a.cols());
  if (r < 1 || r > full) {
    throw InvalidArgument("truncated_svd: rank " + std::to_string(r) + " outside [1, " +
                          std::to_string(full) + "] for " + a.shape_string());
  }
  const FullSvd svd = full_svd(as_eigen(a), true);
  const std::size_t keep = std::min(r, numerical_rank(svd.s));
  if (keep == 0) throw InvalidArgument("truncated_svd: matrix has no nonzero singular values");
  return factors_from(svd.u, svd.s, svd.v, keep);
}

SvdFactors randomized_svd(const DenseMatrix& a, std::size_t r, std::size_t oversample,
                          std::size_t power_iters, std::uint64_t seed) {
  const std::size_t full = std::min(a.rows(), a.cols());
  const std::size_t width = r + oversample;
  if (r < 1 || width > full) {
    throw InvalidArgument("randomized_svd: sketch width " + std::to_string(width) + " (rank " +
                          std::to_string(r) + " + oversample " + std::to_string(oversample) +
                          ") outside [1, " + std::to_string(full) + "]");
  }
  const ConstMap am = as_eigen(a);
  const DenseMatrix omega = gaussian_matrix(a.cols(), width, seed);
  RowMajor q = orthonormal_basis(am * as_eigen(omega));
  for (std::size_t it = 0; it < power_iters; ++it) {
    const RowMajor z = orthonormal_basis(am.transpose() * q);
    q = orthonormal_basis(am * z);
  }
  const RowMajor b = q.transpose() * am;  // width x n
  const FullSvd small = full_svd(b, true);
  const std::size_t keep = std::min(r, numerical_rank(small.s));
  if (keep == 0) throw InvalidArgument("randomized_svd: matrix has no nonzero singular values");
  const RowMajor u = q * small.u;
  return factors_from(u, small.s, small.v, keep);
}

std::string_view to_string(SvdMethod method) {
  return method == SvdMethod::exact ? "exact" : "randomized";
}

SvdMethod parse_svd_method(std::string_view text) {
  if (text == "exact") return SvdMethod::exact;
  if (text == "randomized") return SvdMethod::randomized;
  throw InvalidArgument("unknown SVD method '" + std::string(text) + "'");
}

SvdFactors truncate(const SvdFactors& f, std::size_t r) {
  if (r < 1 || r > f.rank()) throw InvalidArgument("truncate: rank out of range");
  if (r == f.rank()) return f;
  std::vector<double> u(f.u.rows() * r);
  for (std::size_t i = 0; i < f.u.rows(); ++i)
    for (std::size_t j = 0; j < r; ++j) u[i * r + j] = f.u(i, j);
  std::vector<double> vt(f.vt.data().begin(), f.vt.data().begin() + static_cast<std::ptrdiff_t>(r * f.vt.cols()));
  return SvdFactors{DenseMatrix(f.u.rows(), r, std::move(u)),
                    std::vector<double>(f.s.begin(), f.s.begin() + static_cast<std::ptrdiff_t>(r)),
                    DenseMatrix(r, f.vt.cols(), std::move(vt))};
}

SvdFactors decompose(const DenseMatrix& a, const RankPolicy& policy, SvdMethod method,
                     std::uint64_t seed) {
  validate(policy);
  const double norm = frobenius_norm(a);
  if (norm == 0.0) throw InvalidArgument("decompose: matrix is zero");
  const std::size_t m = a.rows(), n = a.cols(), full = std::min(m, n);

  const auto exact = [&]() {
    const FullSvd svd = full_svd(as_eigen(a), true);
    const std::vector<double> s(svd.s.data(), svd.s.data() + svd.s.size());
    const std::size_t r = select_rank(s, policy, m, n);
    return factors_from(svd.u, svd.s, svd.v, r);
  };
  if (method == SvdMethod::exact) return exact();

  if (auto r = shape_rank(policy, m, n)) {
    const std::size_t oversample = std::min(kDefaultOversample, full - *r);
    return randomized_svd(a, *r, oversample, kDefaultPowerIters, seed);
  }

  const double total = norm * norm;
  for (std::size_t width = kInitialSketchWidth;; width *= 2) {
    if (width >= full) return exact();
    const std::size_t oversample = std::min(kDefaultOversample, full - width);
    SvdFactors sketch = randomized_svd(a, width, oversample, kDefaultPowerIters, seed);
    if (auto r = partial_rank(sketch.s, total, policy)) return truncate(sketch, *r);
  }
}

DenseMatrix reconstruct(const SvdFactors& f) {
  const std::size_t r = f.rank();
  DenseMatrix us(f.u.rows(), r);
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < r; ++j) us(i, j) = f.u(i, j) * f.s[j];
  return matmul_reference(us, f.vt);
}

}  // namespace lrgemm
