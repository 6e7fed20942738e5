#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "teprog/errors.hpp"
#include "teprog/extended_real.hpp"
#include "teprog/geometry.hpp"
#include "teprog/linalg.hpp"
#include "teprog/sets.hpp"
#include "teprog/subdifferential.hpp"

namespace teprog {

// ---------------------------------------------------------------------------
// Smooth terms
// ---------------------------------------------------------------------------

/// f(x) = ||A x - c||_p^p / p with p >= 2.
struct LpResidual {
  Matrix A;
  Vector c;
  double p = 2.0;
  double sigma_max = 0.0;  ///< power-iteration estimate of the largest singular value of A

  bool operator==(const LpResidual& o) const { return p == o.p && A == o.A && c == o.c; }
};

/// f(w) = (4/15) ((w1 + w2)^{5/2} + (w2 + w3)^{5/2} + (w3 + w1)^{5/2}) on R^3_+.
struct SimplexPower {
  bool operator==(const SimplexPower&) const = default;
};

class SmoothTerm {
 public:
  using Kind = std::variant<LpResidual, SimplexPower>;

  static SmoothTerm lp_residual(Matrix A, Vector c, double p) {
    if (!(p >= 2.0)) throw InvalidParameter("lp residual needs p >= 2");
    if (A.rows() != c.size()) throw InvalidParameter("A and c have inconsistent sizes");
    if (A.size() == 0) throw InvalidParameter("A must be non-empty");
    LpResidual t{std::move(A), std::move(c), p, 0.0};
    t.sigma_max = spectral_norm(t.A).sigma_max;
    return SmoothTerm(std::move(t));
  }
  static SmoothTerm simplex_power() { return SmoothTerm(SimplexPower{}); }

  const Kind& kind() const { return kind_; }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(kind_);
  }

  Index dimension() const {
    if (const auto* t = std::get_if<LpResidual>(&kind_)) return t->A.cols();
    return 3;
  }

  double value(const Vector& x) const {
    check_size(x);
    if (const auto* t = std::get_if<LpResidual>(&kind_)) {
      const Vector r = t->A * x - t->c;
      if (t->p == 2.0) return 0.5 * r.squaredNorm();
      double s = 0.0;
      for (Index i = 0; i < r.size(); ++i) s += std::pow(std::abs(r[i]), t->p);
      return s / t->p;
    }
    const double s12 = x[0] + x[1], s23 = x[1] + x[2], s31 = x[2] + x[0];
    if (s12 < 0.0 || s23 < 0.0 || s31 < 0.0)
      throw DomainError("simplex power term needs nonnegative pair sums");
    return (4.0 / 15.0) * (std::pow(s12, 2.5) + std::pow(s23, 2.5) + std::pow(s31, 2.5));
  }

  /// f'(x). For the residual term, component j is
  /// sum_i |r_i|^{p-2} r_i A_ij with r = A x - c, where |t|^{p-2} t is
  /// evaluated as sign(t) |t|^{p-1}.
  Vector gradient(const Vector& x) const {
    check_size(x);
    if (const auto* t = std::get_if<LpResidual>(&kind_)) {
      Vector r = t->A * x - t->c;
      if (t->p != 2.0)
        for (Index i = 0; i < r.size(); ++i) r[i] = signed_power(r[i], t->p - 1.0);
      return t->A.transpose() * r;
    }
    const double s12 = x[0] + x[1], s23 = x[1] + x[2], s31 = x[2] + x[0];
    if (s12 < 0.0 || s23 < 0.0 || s31 < 0.0)
      throw DomainError("simplex power term needs nonnegative pair sums");
    const double a = std::pow(s12, 1.5), b = std::pow(s23, 1.5), c = std::pow(s31, 1.5);
    Vector g(3);
    g << (2.0 / 3.0) * (a + c), (2.0 / 3.0) * (a + b), (2.0 / 3.0) * (b + c);
    return g;
  }

  std::string describe() const {
    if (const auto* t = std::get_if<LpResidual>(&kind_)) {
      std::ostringstream os;
      os << "lp_residual(p=" << t->p << ",m=" << t->A.rows() << ",n=" << t->A.cols() << ")";
      return os.str();
    }
    return "simplex_power";
  }

  bool operator==(const SmoothTerm& o) const { return kind_ == o.kind_; }

 private:
  explicit SmoothTerm(Kind k) : kind_(std::move(k)) {}
  void check_size(const Vector& x) const {
    if (x.size() != dimension()) throw InvalidParameter("point has the wrong dimension");
  }
  Kind kind_;
};

// ---------------------------------------------------------------------------
// Nonsmooth terms
// ---------------------------------------------------------------------------

struct ZeroTerm {
  bool operator==(const ZeroTerm&) const = default;
};

/// g(x) = lambda ||x||_1.
struct ScaledL1 {
  double lambda = 1.0;
  bool operator==(const ScaledL1&) const = default;
};

/// g(x) = max_i <a_i, x> with rows a_i.
struct MaxLinear {
  Matrix rows;
  bool operator==(const MaxLinear& o) const { return rows == o.rows; }
};

class NonsmoothTerm {
 public:
  using Kind = std::variant<ZeroTerm, ScaledL1, MaxLinear>;

  static NonsmoothTerm zero() { return NonsmoothTerm(ZeroTerm{}); }
  static NonsmoothTerm scaled_l1(double lambda) {
    if (!(lambda > 0.0)) throw InvalidParameter("l1 weight lambda must be positive");
    return NonsmoothTerm(ScaledL1{lambda});
  }
  /// Rows must satisfy sum_j a_ij <= 1 and max_i min_j a_ij >= 0.27, the
  /// conditions that keep the minimizers of the simplex benchmark interior.
  static NonsmoothTerm max_linear(Matrix rows) {
    if (rows.rows() == 0 || rows.cols() == 0) throw InvalidParameter("max_linear needs rows");
    double best_min = -kInf;
    for (Index i = 0; i < rows.rows(); ++i) {
      if (rows.row(i).sum() > 1.0 + 1e-15)
        throw InvalidParameter("max_linear row " + std::to_string(i) + " has coefficient sum > 1");
      best_min = std::max(best_min, rows.row(i).minCoeff());
    }
    if (best_min < 0.27)
      throw InvalidParameter("max_linear needs max_i min_j a_ij >= 0.27");
    return NonsmoothTerm(MaxLinear{std::move(rows)});
  }

  const Kind& kind() const { return kind_; }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(kind_);
  }

  double value(const Vector& x) const {
    if (std::holds_alternative<ZeroTerm>(kind_)) return 0.0;
    if (const auto* t = std::get_if<ScaledL1>(&kind_)) return t->lambda * x.cwiseAbs().sum();
    const auto& m = std::get<MaxLinear>(kind_).rows;
    if (m.cols() != x.size()) throw InvalidParameter("point has the wrong dimension");
    return (m * x).maxCoeff();
  }

  /// Linear pieces a_i with g(x) = max_i <a_i, x> on the relevant region, one
  /// per row. l1 is linear on the orthant; elsewhere it expands to the 2^n
  /// sign patterns (n <= 12).
  Matrix linear_pieces(Index n, bool within_orthant) const {
    if (std::holds_alternative<ZeroTerm>(kind_)) return Matrix::Zero(1, n);
    if (const auto* t = std::get_if<MaxLinear>(&kind_)) return t->rows;
    const double lambda = std::get<ScaledL1>(kind_).lambda;
    if (within_orthant) return Matrix::Constant(1, n, lambda);
    if (n > 12) throw InvalidParameter("l1 term too large for a max-of-linear expansion");
    const Index count = Index{1} << n;
    Matrix rows(count, n);
    for (Index s = 0; s < count; ++s)
      for (Index j = 0; j < n; ++j) rows(s, j) = (s >> j) & 1 ? -lambda : lambda;
    return rows;
  }

  std::string describe() const {
    if (std::holds_alternative<ZeroTerm>(kind_)) return "zero";
    if (const auto* t = std::get_if<ScaledL1>(&kind_)) {
      std::ostringstream os;
      os << "scaled_l1(" << t->lambda << ")";
      return os.str();
    }
    return "max_linear(" + std::to_string(std::get<MaxLinear>(kind_).rows.rows()) + " rows)";
  }

  bool operator==(const NonsmoothTerm& o) const { return kind_ == o.kind_; }

 private:
  explicit NonsmoothTerm(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// Subdifferential of g~ = g + indicator(set) at x, as a membership oracle.
/// Pieces within active_tol of the maximum, zero coordinates within
/// active_tol, and constraints within active_tol of equality are active.
inline Subdifferential nonsmooth_subgradient(const NonsmoothTerm& g, const Vector& x,
                                             const SetDescriptor& set = SetDescriptor::whole_space(),
                                             bool within_orthant = false,
                                             double active_tol = 1e-12) {
  if (!set.contains(x)) throw DomainError("subdifferential requested outside the constraint set");
  const Index n = x.size();

  const auto rho = box_radius(set);
  if (rho && !g.is<MaxLinear>()) {
    const double lambda = g.is<ScaledL1>() ? std::get<ScaledL1>(g.kind()).lambda : 0.0;
    Vector lo(n), hi(n);
    for (Index j = 0; j < n; ++j) {
      if (x[j] > active_tol) {
        lo[j] = hi[j] = lambda;
      } else if (x[j] < -active_tol) {
        lo[j] = hi[j] = -lambda;
      } else {
        lo[j] = -lambda;
        hi[j] = lambda;
      }
      if (std::isfinite(*rho)) {
        if (x[j] >= *rho - active_tol * (1.0 + *rho)) hi[j] = kInf;
        if (x[j] <= -*rho + active_tol * (1.0 + *rho)) lo[j] = -kInf;
      }
    }
    return Subdifferential::separable(std::move(lo), std::move(hi));
  }

  within_orthant = within_orthant || lies_in_orthant(set);
  std::vector<Vector> points;
  if (g.is<ScaledL1>() && !within_orthant) {
    const double lambda = std::get<ScaledL1>(g.kind()).lambda;
    std::vector<Index> zeros;
    Vector base(n);
    for (Index j = 0; j < n; ++j) {
      if (std::abs(x[j]) <= active_tol) {
        zeros.push_back(j);
        base[j] = 0.0;
      } else {
        base[j] = x[j] > 0 ? lambda : -lambda;
      }
    }
    if (zeros.size() > 12) throw InvalidParameter("too many zero coordinates for a polyhedral oracle");
    for (Index s = 0; s < (Index{1} << zeros.size()); ++s) {
      Vector p = base;
      for (std::size_t k = 0; k < zeros.size(); ++k) p[zeros[k]] = (s >> k) & 1 ? -lambda : lambda;
      points.push_back(std::move(p));
    }
  } else {
    const Matrix pieces = g.linear_pieces(n, within_orthant);
    const Vector vals = pieces * x;
    const double top = vals.maxCoeff();
    for (Index i = 0; i < pieces.rows(); ++i)
      if (top - vals[i] <= active_tol * (1.0 + std::abs(top))) points.push_back(pieces.row(i).transpose());
  }

  const auto lin = linear_representation(set, n, within_orthant);
  if (!lin) throw InvalidParameter("no polyhedral description of " + set.describe());
  std::vector<Vector> rays;
  for (Index l = 0; l < lin->inequalities(); ++l) {
    const double slack = lin->h[l] - lin->G.row(l).dot(x);
    if (slack <= active_tol * (1.0 + std::abs(lin->h[l]))) rays.push_back(lin->G.row(l).transpose());
  }
  Matrix P(n, static_cast<Index>(points.size())), R(n, static_cast<Index>(rays.size()));
  for (std::size_t i = 0; i < points.size(); ++i) P.col(static_cast<Index>(i)) = points[i];
  for (std::size_t i = 0; i < rays.size(); ++i) R.col(static_cast<Index>(i)) = rays[i];
  Matrix L = lin->E.transpose();
  return Subdifferential::polyhedral(std::move(P), std::move(R), std::move(L));
}

// ---------------------------------------------------------------------------
// Composite problem
// ---------------------------------------------------------------------------

/// F = f + g on the constraint set C (and +inf outside C), with the Bregman
/// geometry used by the proximal steps.
class CompositeProblem {
 public:
  CompositeProblem(SmoothTerm smooth, NonsmoothTerm nonsmooth, SetDescriptor constraint,
                   BregmanGeometry geometry)
      : smooth_(std::move(smooth)),
        nonsmooth_(std::move(nonsmooth)),
        constraint_(std::move(constraint)),
        geometry_(std::move(geometry)) {
    const Index n = geometry_.dimension();
    if (smooth_.dimension() != n)
      throw InvalidParameter("smooth term and geometry have different dimensions");
    if (const auto* m = std::get_if<MaxLinear>(&nonsmooth_.kind()); m && m->rows.cols() != n)
      throw InvalidParameter("max_linear rows have the wrong dimension");
    if (smooth_.is<SimplexPower>() && !geometry_.is_entropy() && !lies_in_orthant(constraint_))
      throw InvalidParameter("simplex power term needs a constraint inside the orthant");
    if (geometry_.is_entropy() && !lies_in_orthant(constraint_)) {
      // Sampled check of C ⊆ dom(b).
      std::mt19937_64 rng(0x5eed);
      for (int i = 0; i < 200; ++i)
        if (!geometry_.in_domain(sample_point(constraint_, n, rng, false)))
          throw InvalidParameter("constraint set is not contained in dom(b)");
    }
    // g is finite and continuous on C for every implemented term, which is
    // the qualification the prox optimality condition relies on.
    witness_ = interior_witness(constraint_, n, geometry_.is_entropy());
  }

  const SmoothTerm& smooth() const { return smooth_; }
  const NonsmoothTerm& nonsmooth() const { return nonsmooth_; }
  const SetDescriptor& constraint() const { return constraint_; }
  const BregmanGeometry& geometry() const { return geometry_; }
  Index dimension() const { return geometry_.dimension(); }
  /// A point of C ∩ U.
  const Vector& witness() const { return witness_; }

  std::string describe() const {
    return "F = " + smooth_.describe() + " + " + nonsmooth_.describe() + " on " +
           constraint_.describe() + " with " + geometry_.describe();
  }

  bool operator==(const CompositeProblem& o) const {
    return smooth_ == o.smooth_ && nonsmooth_ == o.nonsmooth_ && constraint_ == o.constraint_ &&
           geometry_ == o.geometry_;
  }

 private:
  SmoothTerm smooth_;
  NonsmoothTerm nonsmooth_;
  SetDescriptor constraint_;
  BregmanGeometry geometry_;
  Vector witness_;
};

inline double smooth_value(const CompositeProblem& pb, const Vector& x) {
  if (!pb.geometry().in_domain(x)) throw DomainError("f evaluated outside dom(b)");
  return pb.smooth().value(x);
}

inline Vector smooth_gradient(const CompositeProblem& pb, const Vector& x) {
  if (!pb.geometry().in_zone(x)) throw DomainError("f' evaluated outside the zone U");
  return pb.smooth().gradient(x);
}

inline double nonsmooth_value(const CompositeProblem& pb, const Vector& x) {
  if (!pb.constraint().contains(x)) throw DomainError("g evaluated outside the constraint set");
  return pb.nonsmooth().value(x);
}

/// F(x) = f(x) + g(x) on C, +inf elsewhere.
inline ExtendedReal objective_value(const CompositeProblem& pb, const Vector& x) {
  if (x.size() != pb.dimension() || !pb.geometry().in_domain(x) || !pb.constraint().contains(x))
    return ExtendedReal::plus_infinity();
  return ExtendedReal::finite(pb.smooth().value(x) + pb.nonsmooth().value(x));
}

// ---------------------------------------------------------------------------
// Seeded instances
// ---------------------------------------------------------------------------

struct GeneratedInstance {
  CompositeProblem problem;
  Vector x_true;
  double noise_level = 0.0;  ///< l2 norm of the additive noise
  std::uint64_t seed = 0;
};

/// Reproducible l_p - l_1 instance on R^n: A has i.i.d. N(0, 1/m) entries,
/// x_true has round(density n) nonzero N(0, 1) entries at random positions,
/// and c = A x_true + noise with ||noise||_2 = noise_factor ||A x_true||_2.
/// The instance uses the quadratic geometry with the l2 norm on C = R^n.
inline GeneratedInstance generate_instance(std::uint64_t seed, Index n, Index m, double p,
                                           double lambda, double density,
                                           double noise_factor = 0.01) {
  if (n < 1 || m < 1) throw InvalidParameter("n and m must be at least 1");
  if (!(p >= 2.0)) throw InvalidParameter("p must be >= 2");
  if (!(lambda > 0.0)) throw InvalidParameter("lambda must be positive");
  if (!(density >= 0.0 && density <= 1.0)) throw InvalidParameter("density must be in [0, 1]");
  if (!(noise_factor >= 0.0)) throw InvalidParameter("noise factor must be nonnegative");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  Matrix A(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = scale * normal(rng);

  Vector x_true = Vector::Zero(n);
  const Index nnz = static_cast<Index>(std::llround(density * static_cast<double>(n)));
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) idx[static_cast<std::size_t>(j)] = j;
  for (Index k = 0; k < nnz; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
    x_true[idx[static_cast<std::size_t>(k)]] = normal(rng);
  }

  const Vector signal = A * x_true;
  Vector noise(m);
  for (Index i = 0; i < m; ++i) noise[i] = normal(rng);
  const double level = noise_factor * signal.norm();
  const double nn = noise.norm();
  if (nn > 0.0) noise *= level / nn;
  Vector c = signal + noise;

  CompositeProblem pb(SmoothTerm::lp_residual(std::move(A), std::move(c), p),
                      NonsmoothTerm::scaled_l1(lambda), SetDescriptor::whole_space(),
                      BregmanGeometry::half_squared_euclidean(n, 2.0));
  return GeneratedInstance{std::move(pb), std::move(x_true), level, seed};
}

}  // namespace teprog
