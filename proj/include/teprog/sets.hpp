#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "teprog/errors.hpp"
#include "teprog/linalg.hpp"

namespace teprog {

class SetDescriptor;

struct WholeSpace {
  bool operator==(const WholeSpace&) const = default;
};

/// The cube [-radius, radius]^n.
struct Box {
  double radius = 1.0;
  bool operator==(const Box&) const = default;
};

/// {x : ||x - center||_p <= radius}; an empty center means the origin.
struct Ball {
  double radius = 1.0;
  double norm_exponent = 2.0;
  Vector center;
  bool operator==(const Ball& o) const {
    return radius == o.radius && norm_exponent == o.norm_exponent &&
           center.size() == o.center.size() && center == o.center;
  }
};

/// Probability simplex {x >= 0, sum x = 1}.
struct Simplex {
  bool operator==(const Simplex&) const = default;
};

/// The unbounded prism in R^3 over the probability simplex:
/// sum w >= 1 and sum w - 3 w_j <= 1 for j = 1, 2, 3.
struct Prism {
  bool operator==(const Prism&) const = default;
};

struct Intersection {
  std::vector<SetDescriptor> parts;
  bool operator==(const Intersection& o) const;
};

/// Closed convex set used both as the constraint C and as telescopic members S_k.
class SetDescriptor {
 public:
  using Shape = std::variant<WholeSpace, Box, Ball, Simplex, Prism, Intersection>;

  SetDescriptor() : shape_(WholeSpace{}) {}
  explicit SetDescriptor(Shape s) : shape_(std::move(s)) { validate(); }

  static SetDescriptor whole_space() { return SetDescriptor(WholeSpace{}); }
  static SetDescriptor box(double radius) { return SetDescriptor(Box{radius}); }
  static SetDescriptor ball(double radius, double norm_exponent = 2.0, Vector center = {}) {
    return SetDescriptor(Ball{radius, norm_exponent, std::move(center)});
  }
  static SetDescriptor simplex() { return SetDescriptor(Simplex{}); }
  static SetDescriptor prism() { return SetDescriptor(Prism{}); }

  /// a ∩ b, flattening nested intersections and dropping whole-space factors.
  static SetDescriptor intersect(const SetDescriptor& a, const SetDescriptor& b) {
    std::vector<SetDescriptor> parts;
    auto push = [&parts](const SetDescriptor& s) {
      if (s.is<WholeSpace>()) return;
      if (s.is<Intersection>()) {
        for (const auto& p : std::get<Intersection>(s.shape_).parts) parts.push_back(p);
      } else {
        parts.push_back(s);
      }
    };
    push(a);
    push(b);
    if (parts.empty()) return whole_space();
    if (parts.size() == 1) return parts.front();
    return SetDescriptor(Intersection{std::move(parts)});
  }

  const Shape& shape() const { return shape_; }

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(shape_);
  }

  /// Membership up to a relative violation tol·(1 + |rhs|) per inequality.
  bool contains(const Vector& x, double tol = 1e-12) const {
    return std::visit([&](const auto& s) { return contains_impl(s, x, tol); }, shape_);
  }

  std::string describe() const {
    return std::visit([](const auto& s) { return describe_impl(s); }, shape_);
  }

  bool operator==(const SetDescriptor& o) const { return shape_ == o.shape_; }

 private:
  void validate() const {
    if (const auto* b = std::get_if<Box>(&shape_); b && !(b->radius > 0.0))
      throw InvalidParameter("box radius must be positive");
    if (const auto* b = std::get_if<Ball>(&shape_)) {
      if (!(b->radius > 0.0)) throw InvalidParameter("ball radius must be positive");
      if (!(b->norm_exponent >= 1.0)) throw InvalidParameter("ball norm exponent must be >= 1");
    }
  }

  static bool contains_impl(const WholeSpace&, const Vector&, double) { return true; }
  static bool contains_impl(const Box& b, const Vector& x, double tol) {
    return x.size() == 0 || x.cwiseAbs().maxCoeff() <= b.radius + tol * (1.0 + b.radius);
  }
  static bool contains_impl(const Ball& b, const Vector& x, double tol) {
    const double d = b.center.size() == 0 ? lp_norm(x, b.norm_exponent)
                                          : lp_norm(x - b.center, b.norm_exponent);
    return d <= b.radius + tol * (1.0 + b.radius);
  }
  static bool contains_impl(const Simplex&, const Vector& x, double tol) {
    if (x.size() == 0) return false;
    const double n = static_cast<double>(x.size());
    return x.minCoeff() >= -tol && std::abs(x.sum() - 1.0) <= tol * (1.0 + n);
  }
  static bool contains_impl(const Prism&, const Vector& x, double tol) {
    if (x.size() != 3) throw InvalidParameter("the prism is defined in R^3 only");
    const double s = x.sum();
    if (s < 1.0 - 4.0 * tol * (1.0 + std::abs(s))) return false;
    for (Index j = 0; j < 3; ++j)
      if (s - 3.0 * x[j] > 1.0 + 6.0 * tol * (1.0 + std::abs(s))) return false;
    return true;
  }
  static bool contains_impl(const Intersection& in, const Vector& x, double tol) {
    return std::all_of(in.parts.begin(), in.parts.end(),
                       [&](const SetDescriptor& p) { return p.contains(x, tol); });
  }

  static std::string num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
  }
  static std::string describe_impl(const WholeSpace&) { return "whole_space"; }
  static std::string describe_impl(const Box& b) { return "box(" + num(b.radius) + ")"; }
  static std::string describe_impl(const Ball& b) {
    std::string s = "ball(" + num(b.radius) + ",p=" + num(b.norm_exponent);
    if (b.center.size() != 0 && !b.center.isZero(0.0)) s += ",centered";
    return s + ")";
  }
  static std::string describe_impl(const Simplex&) { return "simplex"; }
  static std::string describe_impl(const Prism&) { return "prism"; }
  static std::string describe_impl(const Intersection& in) {
    std::string s = "intersection[";
    for (std::size_t i = 0; i < in.parts.size(); ++i) s += (i ? "," : "") + in.parts[i].describe();
    return s + "]";
  }

  Shape shape_;
};

inline bool Intersection::operator==(const Intersection& o) const { return parts == o.parts; }

// ---------------------------------------------------------------------------
// Structural queries
// ---------------------------------------------------------------------------

/// Radius rho when the set is [-rho, rho]^n (inf for the whole space), otherwise nullopt.
inline std::optional<double> box_radius(const SetDescriptor& set) {
  if (set.is<WholeSpace>()) return kInf;
  if (set.is<Box>()) return std::get<Box>(set.shape()).radius;
  if (set.is<Ball>()) {
    const auto& b = std::get<Ball>(set.shape());
    if (std::isinf(b.norm_exponent) && (b.center.size() == 0 || b.center.isZero(0.0)))
      return b.radius;
    return std::nullopt;
  }
  if (set.is<Intersection>()) {
    double r = kInf;
    for (const auto& p : std::get<Intersection>(set.shape()).parts) {
      auto pr = box_radius(p);
      if (!pr) return std::nullopt;
      r = std::min(r, *pr);
    }
    return r;
  }
  return std::nullopt;
}

/// True when the set is known to lie in the closed nonnegative orthant.
inline bool lies_in_orthant(const SetDescriptor& set) {
  if (set.is<Simplex>() || set.is<Prism>()) return true;
  if (set.is<Intersection>()) {
    const auto& parts = std::get<Intersection>(set.shape()).parts;
    return std::any_of(parts.begin(), parts.end(), [](const auto& p) { return lies_in_orthant(p); });
  }
  return false;
}

inline bool contains_simplex_factor(const SetDescriptor& set) {
  if (set.is<Simplex>()) return true;
  if (set.is<Intersection>()) {
    const auto& parts = std::get<Intersection>(set.shape()).parts;
    return std::any_of(parts.begin(), parts.end(),
                       [](const auto& p) { return contains_simplex_factor(p); });
  }
  return false;
}

/// Upper bound on sup ||x||_p over the set, nullopt when the set is unbounded.
inline std::optional<double> norm_radius(const SetDescriptor& set, double p, Index n) {
  if (set.is<WholeSpace>() || set.is<Prism>()) return std::nullopt;
  if (set.is<Simplex>()) return 1.0;  // ||x||_p <= ||x||_1 = 1
  if (set.is<Box>())
    return std::get<Box>(set.shape()).radius * norm_conversion(kInf, p, n);
  if (set.is<Ball>()) {
    const auto& b = std::get<Ball>(set.shape());
    const double c = b.center.size() == 0 ? 0.0 : lp_norm(b.center, p);
    return c + b.radius * norm_conversion(b.norm_exponent, p, n);
  }
  std::optional<double> best;
  for (const auto& part : std::get<Intersection>(set.shape()).parts) {
    auto r = norm_radius(part, p, n);
    if (r && (!best || *r < *best)) best = r;
  }
  return best;
}

/// Polyhedral description {G x <= h, E x = e}.
struct LinearSet {
  Matrix G;
  Vector h;
  Matrix E;
  Vector e;

  Index inequalities() const { return G.rows(); }
  Index equalities() const { return E.rows(); }
};

namespace detail {

inline void append_rows(Matrix& M, Vector& v, const Matrix& rows, const Vector& rhs) {
  const Index old = M.rows();
  Matrix M2(old + rows.rows(), rows.cols());
  Vector v2(old + rows.rows());
  if (old) {
    M2.topRows(old) = M;
    v2.head(old) = v;
  }
  M2.bottomRows(rows.rows()) = rows;
  v2.tail(rows.rows()) = rhs;
  M = std::move(M2);
  v = std::move(v2);
}

}  // namespace detail

/// Linear description of the set in R^n. Balls in the l1 norm are linear on
/// the nonnegative orthant, which callers assert through within_orthant.
/// Returns nullopt for shapes without a finite linear description.
inline std::optional<LinearSet> linear_representation(const SetDescriptor& set, Index n,
                                                      bool within_orthant) {
  LinearSet out;
  out.G.resize(0, n);
  out.E.resize(0, n);
  within_orthant = within_orthant || lies_in_orthant(set);

  auto add = [&](const SetDescriptor& s) -> bool {
    if (s.is<WholeSpace>()) return true;
    if (s.is<Box>() || (s.is<Ball>() && std::isinf(std::get<Ball>(s.shape()).norm_exponent))) {
      double r = 0.0;
      Vector c = Vector::Zero(n);
      if (s.is<Box>()) {
        r = std::get<Box>(s.shape()).radius;
      } else {
        const auto& b = std::get<Ball>(s.shape());
        r = b.radius;
        if (b.center.size()) c = b.center;
      }
      Matrix rows(2 * n, n);
      rows << Matrix::Identity(n, n), -Matrix::Identity(n, n);
      Vector rhs(2 * n);
      rhs << (c.array() + r).matrix(), (r - c.array()).matrix();
      detail::append_rows(out.G, out.h, rows, rhs);
      return true;
    }
    if (s.is<Ball>()) {
      const auto& b = std::get<Ball>(s.shape());
      if (b.norm_exponent != 1.0 || !within_orthant) return false;
      if (b.center.size() && !b.center.isZero(0.0)) return false;
      detail::append_rows(out.G, out.h, Matrix::Ones(1, n), Vector::Constant(1, b.radius));
      return true;
    }
    if (s.is<Simplex>()) {
      detail::append_rows(out.G, out.h, -Matrix::Identity(n, n), Vector::Zero(n));
      detail::append_rows(out.E, out.e, Matrix::Ones(1, n), Vector::Ones(1));
      return true;
    }
    if (s.is<Prism>()) {
      if (n != 3) throw InvalidParameter("the prism is defined in R^3 only");
      Matrix rows(4, 3);
      rows << -1, -1, -1, -2, 1, 1, 1, -2, 1, 1, 1, -2;
      Vector rhs(4);
      rhs << -1, 1, 1, 1;
      detail::append_rows(out.G, out.h, rows, rhs);
      return true;
    }
    return false;
  };

  if (set.is<Intersection>()) {
    for (const auto& p : std::get<Intersection>(set.shape()).parts)
      if (!add(p)) return std::nullopt;
  } else if (!add(set)) {
    return std::nullopt;
  }
  return out;
}

/// A point of the set, strictly positive when `positive` is requested
/// (used as a witness of C ∩ U and as a default starting point).
inline Vector interior_witness(const SetDescriptor& set, Index n, bool positive) {
  std::vector<Vector> candidates;
  auto collect = [&](const SetDescriptor& s) {
    if (s.is<Simplex>() || s.is<Prism>()) {
      candidates.push_back(Vector::Constant(n, 1.0 / static_cast<double>(n)));
    } else if (s.is<Box>()) {
      const double r = std::get<Box>(s.shape()).radius;
      candidates.push_back(positive ? Vector::Constant(n, 0.5 * r) : Vector::Zero(n));
    } else if (s.is<Ball>()) {
      const auto& b = std::get<Ball>(s.shape());
      Vector c = b.center.size() ? b.center : Vector::Zero(n);
      if (positive) {
        const double t = 0.5 * b.radius / norm_conversion(kInf, b.norm_exponent, n);
        candidates.push_back(c + Vector::Constant(n, t));
      } else {
        candidates.push_back(c);
      }
    }
  };
  if (set.is<Intersection>()) {
    for (const auto& p : std::get<Intersection>(set.shape()).parts) collect(p);
  } else {
    collect(set);
  }
  candidates.push_back(positive ? Vector::Ones(n) : Vector::Zero(n));
  candidates.push_back(Vector::Constant(n, 1.0 / static_cast<double>(n)));
  for (const auto& c : candidates) {
    if (positive && c.minCoeff() <= 0.0) continue;
    if (set.contains(c)) return c;
  }
  throw NotFound("no witness point found in " + set.describe());
}

/// Random point of the set (strictly positive if requested). The generator
/// is chosen from the most specific factor and the result is rejected against
/// the whole set; unbounded factors are truncated at fallback_radius.
template <class Rng>
Vector sample_point(const SetDescriptor& set, Index n, Rng& rng, bool positive,
                    double fallback_radius = 10.0, int max_tries = 200000) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<SetDescriptor> parts;
  if (set.is<Intersection>())
    parts = std::get<Intersection>(set.shape()).parts;
  else
    parts = {set};

  const SetDescriptor* gen = nullptr;
  for (const auto& p : parts)
    if (p.is<Simplex>()) gen = &p;
  if (!gen)
    for (const auto& p : parts)
      if (p.is<Ball>()) gen = &p;
  if (!gen)
    for (const auto& p : parts)
      if (p.is<Box>()) gen = &p;

  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Vector x(n);
    if (gen && gen->is<Simplex>()) {
      for (Index j = 0; j < n; ++j) x[j] = -std::log(1.0 - unif(rng));
      x /= x.sum();
    } else if (gen && gen->is<Ball>()) {
      const auto& b = std::get<Ball>(gen->shape());
      for (Index j = 0; j < n; ++j) x[j] = normal(rng);
      const bool origin = b.center.size() == 0 || b.center.isZero(0.0);
      if (positive && origin) x = x.cwiseAbs();
      const double nrm = lp_norm(x, b.norm_exponent);
      if (nrm == 0.0) continue;
      const double radius = b.radius * std::pow(unif(rng), 1.0 / static_cast<double>(n));
      x *= radius / nrm;
      if (!origin) x += b.center;
    } else if (gen && gen->is<Box>()) {
      const double r = std::get<Box>(gen->shape()).radius;
      for (Index j = 0; j < n; ++j) {
        const double u = unif(rng);
        if (!positive && u < 0.1)
          x[j] = -r;
        else if (u > 0.9)
          x[j] = r;
        else
          x[j] = positive ? r * unif(rng) : r * (2.0 * unif(rng) - 1.0);
      }
    } else {
      for (Index j = 0; j < n; ++j)
        x[j] = positive ? fallback_radius * unif(rng) : fallback_radius * (2.0 * unif(rng) - 1.0);
    }
    if (positive && x.minCoeff() <= 0.0) continue;
    if (set.contains(x)) return x;
  }
  throw NotFound("rejection sampling failed for " + set.describe());
}

}  // namespace teprog
