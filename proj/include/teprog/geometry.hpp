#pragma once

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "teprog/errors.hpp"
#include "teprog/linalg.hpp"
#include "teprog/sets.hpp"

namespace teprog {

enum class BregmanKind { HalfSquaredEuclidean, NegativeEntropy };

/// A semi-Bregman function b on R^n together with the norm of the ambient
/// space. The norm matters for strong-convexity and Lipschitz statements
/// only; b itself does not depend on it.
///
///  - HalfSquaredEuclidean: b(x) = ||x||_2^2 / 2, dom(b) = U = R^n, space norm
///    l_r with r >= 2.
///  - NegativeEntropy: b(x) = sum x_j ln x_j with 0 ln 0 = 0 on the closed
///    orthant, U the open orthant, space norm l_p with p >= 1.
class BregmanGeometry {
 public:
  static BregmanGeometry half_squared_euclidean(Index n, double norm_exponent = 2.0) {
    if (!(norm_exponent >= 2.0))
      throw InvalidParameter("half squared euclidean geometry needs a norm exponent r >= 2");
    return BregmanGeometry(BregmanKind::HalfSquaredEuclidean, n, norm_exponent);
  }
  static BregmanGeometry negative_entropy(Index n, double norm_exponent = 1.0) {
    if (!(norm_exponent >= 1.0)) throw InvalidParameter("norm exponent must be >= 1");
    return BregmanGeometry(BregmanKind::NegativeEntropy, n, norm_exponent);
  }

  BregmanKind kind() const { return kind_; }
  Index dimension() const { return n_; }
  double norm_exponent() const { return r_; }
  double dual_norm_exponent() const { return dual_exponent(r_); }
  bool is_entropy() const { return kind_ == BregmanKind::NegativeEntropy; }

  double norm(const Vector& v) const { return lp_norm(v, r_); }
  double dual_norm(const Vector& v) const { return lp_norm(v, dual_norm_exponent()); }

  bool in_domain(const Vector& x) const {
    if (x.size() != n_) return false;
    if (!x.allFinite()) return false;
    return kind_ == BregmanKind::HalfSquaredEuclidean || x.minCoeff() >= 0.0;
  }
  bool in_zone(const Vector& x) const {
    if (x.size() != n_) return false;
    if (!x.allFinite()) return false;
    return kind_ == BregmanKind::HalfSquaredEuclidean || x.minCoeff() > 0.0;
  }

  /// b(x); throws DomainError outside dom(b).
  double value(const Vector& x) const {
    if (!in_domain(x)) throw DomainError("point outside dom(b)");
    if (kind_ == BregmanKind::HalfSquaredEuclidean) return 0.5 * x.squaredNorm();
    double s = 0.0;
    for (Index j = 0; j < n_; ++j)
      if (x[j] > 0.0) s += x[j] * std::log(x[j]);
    return s;
  }

  std::string describe() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s(n=%ld,norm=l%g)",
                  kind_ == BregmanKind::HalfSquaredEuclidean ? "half_squared_euclidean"
                                                             : "negative_entropy",
                  static_cast<long>(n_), r_);
    return buf;
  }

  bool operator==(const BregmanGeometry&) const = default;

 private:
  BregmanGeometry(BregmanKind k, Index n, double r) : kind_(k), n_(n), r_(r) {
    if (n <= 0) throw InvalidParameter("dimension must be positive");
  }

  BregmanKind kind_;
  Index n_;
  double r_;
};

/// b'(x) for x in U.
inline Vector bregman_gradient(const BregmanGeometry& g, const Vector& x) {
  if (!g.in_zone(x)) throw DomainError("b' is undefined outside the zone U");
  if (g.kind() == BregmanKind::HalfSquaredEuclidean) return x;
  return (x.array().log() + 1.0).matrix();
}

/// B(x, y) = b(x) - b(y) - <b'(y), x - y> for x in dom(b), y in U.
///
/// Evaluated through the algebraically equal forms ||x - y||^2 / 2 and
/// sum x ln(x/y) - x + y, which vanish exactly at x = y.
inline double bregman_value(const BregmanGeometry& g, const Vector& x, const Vector& y) {
  if (!g.in_domain(x)) throw DomainError("B(x, y): x outside dom(b)");
  if (!g.in_zone(y)) throw DomainError("B(x, y): y outside the zone U");
  if (g.kind() == BregmanKind::HalfSquaredEuclidean) return 0.5 * (x - y).squaredNorm();
  double s = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    const double xj = x[j], yj = y[j];
    s += (xj > 0.0 ? xj * std::log(xj / yj) : 0.0) - xj + yj;
  }
  return std::max(s, 0.0);
}

/// A certified strong-convexity parameter of b on `set` with respect to the
/// geometry's norm.
///
/// Quadratic b: 1 on every set, since ||x||_2 >= ||x||_r for r >= 2.
/// Entropy: on {x >= 0, sum x <= R} the Hessian diag(1/x) gives
/// <d, H d> >= ||d||_1^2 / R >= ||d||_p^2 / R, hence 1/R.
inline double strong_convexity_parameter(const BregmanGeometry& g, const SetDescriptor& set) {
  if (g.kind() == BregmanKind::HalfSquaredEuclidean) return 1.0;
  const auto sum_bound = norm_radius(set, 1.0, g.dimension());
  if (!sum_bound)
    throw NotStronglyConvex("negative entropy is not strongly convex on the unbounded set " +
                            set.describe());
  return 1.0 / std::max(*sum_bound, 1e-300);
}

struct StrongConvexityEstimate {
  double mu = 0.0;         ///< safety * min_ratio
  double min_ratio = 0.0;  ///< smallest sampled ratio
  std::size_t samples = 0;
};

/// Sampled estimate of the strong-convexity modulus: the minimum over random
/// pairs (x, y) in set ∩ U and lambda in (0, 1) of
///   (lambda b(x) + (1 - lambda) b(y) - b(lambda x + (1 - lambda) y)) /
///   (lambda (1 - lambda) ||x - y||^2 / 2),
/// scaled by a safety factor. Validity is sample-based only.
template <class Rng>
StrongConvexityEstimate estimate_strong_convexity(const BregmanGeometry& g,
                                                  const SetDescriptor& set, Rng& rng,
                                                  std::size_t samples = 10000,
                                                  double safety = 0.9) {
  std::uniform_real_distribution<double> lam(0.05, 0.95);
  StrongConvexityEstimate est;
  est.min_ratio = kInf;
  const bool positive = g.is_entropy();
  for (std::size_t s = 0; s < samples; ++s) {
    const Vector x = sample_point(set, g.dimension(), rng, positive);
    const Vector y = sample_point(set, g.dimension(), rng, positive);
    const double d = g.norm(x - y);
    if (d < 1e-6) continue;
    const double l = lam(rng);
    const double gap = l * g.value(x) + (1.0 - l) * g.value(y) - g.value(l * x + (1.0 - l) * y);
    est.min_ratio = std::min(est.min_ratio, gap / (0.5 * l * (1.0 - l) * d * d));
    ++est.samples;
  }
  if (est.samples == 0) throw NotFound("no usable sample pairs");
  est.mu = safety * est.min_ratio;
  return est;
}

}  // namespace teprog
