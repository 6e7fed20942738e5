#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <variant>

#include "teprog/errors.hpp"
#include "teprog/geometry.hpp"
#include "teprog/linalg.hpp"
#include "teprog/problems.hpp"
#include "teprog/sets.hpp"

namespace teprog {

/// S_k = [-k^sigma, k^sigma]^n ∩ C.
struct PowerBox {
  double sigma = 0.5;
  bool operator==(const PowerBox&) const = default;
};

/// S_k = {||x - center||_p <= sqrt(k)} ∩ C; an empty center is the origin.
struct SqrtBall {
  Vector center;
  double norm_exponent = 2.0;
  bool operator==(const SqrtBall& o) const {
    return norm_exponent == o.norm_exponent && center.size() == o.center.size() &&
           center == o.center;
  }
};

/// S_k = C for every k.
struct ConstantFamily {
  bool operator==(const ConstantFamily&) const = default;
};

class TelescopicSchedule {
 public:
  using Family = std::variant<PowerBox, SqrtBall, ConstantFamily>;

  static TelescopicSchedule power_box(double sigma, SetDescriptor constraint) {
    if (!(sigma > 0.0)) throw InvalidParameter("power box exponent sigma must be positive");
    return TelescopicSchedule(PowerBox{sigma}, std::move(constraint));
  }
  static TelescopicSchedule sqrt_ball(SetDescriptor constraint, double norm_exponent = 2.0,
                                      Vector center = {}) {
    if (!(norm_exponent >= 1.0)) throw InvalidParameter("ball norm exponent must be >= 1");
    return TelescopicSchedule(SqrtBall{std::move(center), norm_exponent}, std::move(constraint));
  }
  static TelescopicSchedule constant(SetDescriptor constraint) {
    return TelescopicSchedule(ConstantFamily{}, std::move(constraint));
  }

  const Family& family() const { return family_; }
  const SetDescriptor& constraint() const { return constraint_; }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(family_);
  }
  bool growing() const { return !is<ConstantFamily>(); }

  /// rho_k = k^sigma or r_k = sqrt(k); infinity for the constant family.
  double radius_at(std::int64_t k) const {
    check_k(k);
    const double kk = static_cast<double>(k);
    if (const auto* pb = std::get_if<PowerBox>(&family_)) return std::pow(kk, pb->sigma);
    if (is<SqrtBall>()) return std::sqrt(kk);
    return kInf;
  }

  SetDescriptor set_at(std::int64_t k) const {
    check_k(k);
    if (is<PowerBox>()) return SetDescriptor::intersect(SetDescriptor::box(radius_at(k)), constraint_);
    if (const auto* sb = std::get_if<SqrtBall>(&family_))
      return SetDescriptor::intersect(SetDescriptor::ball(radius_at(k), sb->norm_exponent, sb->center),
                                      constraint_);
    return constraint_;
  }

  std::string describe() const {
    std::ostringstream os;
    if (const auto* pb = std::get_if<PowerBox>(&family_))
      os << "power_box(sigma=" << pb->sigma << ")";
    else if (const auto* sb = std::get_if<SqrtBall>(&family_))
      os << "sqrt_ball(p=" << sb->norm_exponent << (sb->center.size() ? ",centered" : "") << ")";
    else
      os << "constant";
    os << " within " << constraint_.describe();
    return os.str();
  }

  bool operator==(const TelescopicSchedule& o) const {
    return family_ == o.family_ && constraint_ == o.constraint_;
  }

 private:
  TelescopicSchedule(Family f, SetDescriptor c) : family_(std::move(f)), constraint_(std::move(c)) {}
  static void check_k(std::int64_t k) {
    if (k < 1) throw InvalidParameter("telescopic index k must be >= 1");
  }

  Family family_;
  SetDescriptor constraint_;
};

/// sigma in (0, 1/(p-2)) as required for p > 2; free otherwise.
inline double default_power_sigma(double p) {
  if (p > 2.0) return std::min(0.5, 0.5 / (p - 2.0));
  return 0.5;
}

/// mu_k: a certified strong-convexity parameter of b on S_k.
inline double mu_at(const BregmanGeometry& geometry, const TelescopicSchedule& schedule,
                    std::int64_t k) {
  return strong_convexity_parameter(geometry, schedule.set_at(k));
}

/// Upper bound on ||A||_{r -> p} from the largest singular value:
/// ||A x||_p <= ||A x||_2 for p >= 2 and ||x||_2 <= n^{1/2 - 1/r} ||x||_r.
/// The small factor covers the power-iteration estimate approaching
/// sigma_max from below.
inline double operator_norm_bound(const LpResidual& t, double r) {
  constexpr double kSafety = 1.0 + 1e-6;
  return kSafety * t.sigma_max * norm_conversion(r, 2.0, t.A.cols());
}

/// Certified Lipschitz constant of f' on set ∩ U, measured from the
/// geometry's norm to its dual.
///
/// l_p residual: with u = A x - c, the map u -> sign(u)|u|^{p-1} is
/// (p-1) max(||u||_p, ||v||_p)^{p-2}-Lipschitz from l_p to l_{p*}, and
/// ||u||_p <= ||A|| M + ||c||_p where M bounds ||x||_r on the set. This
/// gives (p-1) (2 (||A|| M + ||c||_p))^{p-2} ||A||^2, the factor ||A||
/// appearing twice because f' = A^T h'(A x - c).
///
/// Simplex power term: 4 sqrt(2) ||(1,1,1)||_q sqrt(M) with M bounding the
/// set's norm radius.
inline double lipschitz_bound(const CompositeProblem& problem, const SetDescriptor& set) {
  const auto& geo = problem.geometry();
  const Index n = problem.dimension();
  if (const auto* t = std::get_if<LpResidual>(&problem.smooth().kind())) {
    const double a = operator_norm_bound(*t, geo.norm_exponent());
    if (t->p == 2.0) return a * a;
    const auto M = norm_radius(set, geo.norm_exponent(), n);
    if (!M) throw NoBoundAvailable("no Lipschitz bound for p > 2 on the unbounded set " + set.describe());
    const double base = 2.0 * (a * *M + lp_norm(t->c, t->p));
    return (t->p - 1.0) * std::pow(base, t->p - 2.0) * a * a;
  }
  const auto M = norm_radius(set, geo.norm_exponent(), n);
  if (!M) throw NoBoundAvailable("no Lipschitz bound for the power term on the unbounded set " + set.describe());
  const double q = geo.dual_norm_exponent();
  const double ones = std::isinf(q) ? 1.0 : std::pow(3.0, 1.0 / q);
  return 4.0 * std::sqrt(2.0) * ones * std::sqrt(*M);
}

inline double lipschitz_bound_at(const CompositeProblem& problem, const TelescopicSchedule& schedule,
                                 std::int64_t k) {
  return lipschitz_bound(problem, schedule.set_at(k));
}

enum class StepRule { Lipschitz, Backtracking };

inline const char* to_string(StepRule r) {
  return r == StepRule::Lipschitz ? "lipschitz" : "backtracking";
}

/// tau_k with tau_k >= L_k and tau nondecreasing.
///
/// Lipschitz rule: tau_k = L_k = max(L_1, bound_k), using that the bounds
/// are nondecreasing along the schedule. Backtracking: every accepted L_k
/// is at most max(L_1, eta bound_k), which is eta bound_k for a growing
/// schedule with admissible L_1 and L_1 for a constant schedule with
/// L_1 > eta bound.
inline double tau_at(const CompositeProblem& problem, const TelescopicSchedule& schedule,
                     StepRule rule, double eta, double L1, std::int64_t k) {
  if (rule == StepRule::Lipschitz) {
    if (k == 1) return L1;
    return std::max(L1, lipschitz_bound_at(problem, schedule, k));
  }
  return std::max(L1, eta * lipschitz_bound_at(problem, schedule, k));
}

/// Smallest k with x_ref in S_k, raised to 2 when F(x_1) is infinite.
inline std::int64_t find_k0(const TelescopicSchedule& schedule, const Vector& x_ref,
                            bool F_of_x1_finite, std::int64_t cap = std::int64_t{1} << 40) {
  const std::int64_t floor_k = F_of_x1_finite ? 1 : 2;
  if (!schedule.constraint().contains(x_ref))
    throw NotFound("reference point is outside the constraint set");
  auto inside = [&](std::int64_t k) { return schedule.set_at(k).contains(x_ref); };
  if (inside(floor_k)) return floor_k;
  if (!schedule.growing()) throw NotFound("reference point is outside S_k for every k");
  std::int64_t lo = floor_k, hi = floor_k;
  while (!inside(hi)) {
    lo = hi;
    if (hi >= cap) throw NotFound("reference point is outside S_k for every k <= cap");
    hi = std::min(cap, hi * 2);
  }
  // inside(hi) and !inside(lo)
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (inside(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace teprog
