#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "teprog/errors.hpp"

namespace teprog {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// ||v||_p for p in [1, inf].
inline double lp_norm(const Vector& v, double p) {
  if (std::isinf(p)) return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  if (p == 1.0) return v.cwiseAbs().sum();
  if (p == 2.0) return v.norm();
  double scale = v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]) / scale, p);
  return scale * std::pow(s, 1.0 / p);
}

/// Hoelder conjugate q of p, 1/p + 1/q = 1.
inline double dual_exponent(double p) {
  if (p < 1.0) throw InvalidParameter("norm exponent must be >= 1");
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

/// Factor k with ||x||_to <= k ||x||_from for every x in R^n.
inline double norm_conversion(double from, double to, Index n) {
  const double inv_to = std::isinf(to) ? 0.0 : 1.0 / to;
  const double inv_from = std::isinf(from) ? 0.0 : 1.0 / from;
  const double e = inv_to - inv_from;
  return e > 0.0 ? std::pow(static_cast<double>(n), e) : 1.0;
}

/// sign(t) |t|^e, continuous at zero for e > 0.
inline double signed_power(double t, double e) {
  if (t == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(t), e), t);
}

struct SpectralEstimate {
  double sigma_max = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value of A by power iteration on A^T A. The Rayleigh
/// quotient approaches lambda_max from below; callers needing an upper bound
/// apply their own safety factor.
inline SpectralEstimate spectral_norm(const Matrix& A, double rel_tol = 1e-10,
                                      int max_iterations = 100000) {
  SpectralEstimate out;
  const Index n = A.cols();
  if (A.size() == 0) {
    out.converged = true;
    return out;
  }
  // Deterministic, non-symmetric start so that it is unlikely to be
  // orthogonal to the dominant singular vector.
  Vector v(n);
  for (Index j = 0; j < n; ++j) v[j] = 1.0 + 0.5 * std::sin(1.0 + 3.0 * static_cast<double>(j));
  v.normalize();
  double lambda = 0.0;
  Vector Av(A.rows()), w(n);
  for (int it = 1; it <= max_iterations; ++it) {
    Av.noalias() = A * v;
    w.noalias() = A.transpose() * Av;
    const double next = v.dot(w);
    const double wn = w.norm();
    out.iterations = it;
    if (wn == 0.0) {
      lambda = 0.0;
      out.converged = true;
      break;
    }
    v = w / wn;
    if (std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      lambda = std::max(next, wn > 0.0 ? v.dot(A.transpose() * (A * v)) : 0.0);
      out.converged = true;
      break;
    }
    lambda = next;
  }
  out.sigma_max = std::sqrt(std::max(lambda, 0.0));
  return out;
}

}  // namespace teprog
