#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "teprog/errors.hpp"
#include "teprog/extended_real.hpp"
#include "teprog/geometry.hpp"
#include "teprog/linalg.hpp"
#include "teprog/problems.hpp"
#include "teprog/sets.hpp"
#include "teprog/subdifferential.hpp"

namespace teprog {

/// Data of one proximal step: minimize
///   Q(x, y) = f(y) + <f'(y), x - y> + (L/mu) B(x, y) + g(x)  over x in S.
class ProxSubproblem {
 public:
  ProxSubproblem(const CompositeProblem& problem, Vector y, double L, double mu, SetDescriptor set)
      : problem_(&problem), y_(std::move(y)), L_(L), mu_(mu), set_(std::move(set)) {
    if (!(L_ > 0.0) || !std::isfinite(L_)) throw InvalidParameter("prox parameter L must be positive");
    if (!(mu_ > 0.0) || !std::isfinite(mu_)) throw InvalidParameter("prox parameter mu must be positive");
    if (!problem.geometry().in_zone(y_)) throw DomainError("prox center y is outside the zone U");
    if (!set_.contains(y_)) throw DomainError("prox center y is outside the set S");
    f_y_ = problem.smooth().value(y_);
    grad_y_ = problem.smooth().gradient(y_);
  }

  const CompositeProblem& problem() const { return *problem_; }
  const Vector& y() const { return y_; }
  double L() const { return L_; }
  double mu() const { return mu_; }
  double ratio() const { return L_ / mu_; }
  const SetDescriptor& set() const { return set_; }
  double f_y() const { return f_y_; }
  const Vector& grad_y() const { return grad_y_; }

 private:
  const CompositeProblem* problem_;
  Vector y_;
  double L_, mu_;
  SetDescriptor set_;
  double f_y_ = 0.0;
  Vector grad_y_;
};

inline ExtendedReal surrogate_value(const ProxSubproblem& sub, const Vector& x) {
  const auto& pb = sub.problem();
  if (!sub.set().contains(x)) throw DomainError("surrogate evaluated outside S");
  if (!pb.geometry().in_domain(x)) throw DomainError("surrogate evaluated outside dom(b)");
  const double q = sub.f_y() + sub.grad_y().dot(x - sub.y()) +
                   sub.ratio() * bregman_value(pb.geometry(), x, sub.y()) + pb.nonsmooth().value(x);
  return ExtendedReal::finite(q);
}

/// Coordinatewise minimizer over [-rho, rho]^n of
///   H_j(t) = phi_j t + c (t - x_j)^2 / 2 + lambda |t|,
/// chosen among the boundary points, the kink, and the two one-sided
/// stationary points. rho may be infinite (no box) and lambda may be 0.
inline Vector box_l1_prox(const Vector& phi, const Vector& x_prev, double c, double lambda,
                          double rho) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidParameter("box_l1_prox: c must be positive");
  if (!(rho > 0.0)) throw InvalidParameter("box_l1_prox: rho must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidParameter("box_l1_prox: lambda must be >= 0");
  if (phi.size() != x_prev.size()) throw InvalidParameter("box_l1_prox: size mismatch");
  const bool bounded = std::isfinite(rho);

  constexpr double kTie = 1e-14;
  Vector out(phi.size());
  for (Index j = 0; j < phi.size(); ++j) {
    const double p = phi[j], x = x_prev[j];
    auto H = [&](double t) { return p * t + 0.5 * c * (t - x) * (t - x) + lambda * std::abs(t); };
    std::array<double, 5> cand;
    std::array<bool, 5> ok{bounded, bounded, true, false, false};
    cand[0] = -rho;
    cand[1] = rho;
    cand[2] = 0.0;
    cand[3] = (-p - lambda) / c + x;
    cand[4] = (-p + lambda) / c + x;
    ok[3] = cand[3] > 0.0 && cand[3] < rho;
    ok[4] = cand[4] < 0.0 && cand[4] > -rho;
    double best_t = 0.0, best_h = kInf;
    for (int i = 0; i < 5; ++i) {
      if (!ok[i]) continue;
      const double h = H(cand[i]);
      if (h < best_h - kTie) {
        best_h = h;
        best_t = cand[i];
      }
    }
    out[j] = best_t;
  }
  return out;
}

/// Distance, in the dual norm, from (L/mu)(b'(y) - b'(z)) - f'(y) to the
/// subdifferential of g + indicator(S) at z. Zero exactly at the minimizer.
inline double optimality_residual(const ProxSubproblem& sub, const Vector& z,
                                  double active_tol = 1e-9) {
  const auto& pb = sub.problem();
  const auto& geo = pb.geometry();
  if (!geo.in_zone(z)) throw DomainError("optimality residual: z outside the zone U");
  if (!sub.set().contains(z)) throw DomainError("optimality residual: z outside S");
  const Vector v =
      sub.ratio() * (bregman_gradient(geo, sub.y()) - bregman_gradient(geo, z)) - sub.grad_y();
  const bool orthant = geo.is_entropy() || lies_in_orthant(sub.set());
  const Subdifferential sd = nonsmooth_subgradient(pb.nonsmooth(), z, sub.set(), orthant, active_tol);
  return sd.distance(v, geo.dual_norm_exponent());
}

enum class ProxMethod { ClosedFormBox, EntropySimplex, InteriorPoint };

inline const char* to_string(ProxMethod m) {
  switch (m) {
    case ProxMethod::ClosedFormBox:
      return "closed_form_box";
    case ProxMethod::EntropySimplex:
      return "entropy_simplex";
    default:
      return "interior_point";
  }
}

struct ProxResult {
  Vector z;
  double residual = 0.0;  ///< NaN when not evaluated
  ProxMethod method = ProxMethod::ClosedFormBox;
  int inner_iterations = 0;
};

namespace detail {

/// Multiplicative-weights closed form on the simplex for an objective that
/// is linear there: z_j ∝ y_j exp(-(phi_j + a_j) / c).
inline Vector entropy_simplex_prox(const Vector& y, const Vector& phi, const Vector& a, double c) {
  Vector s = (y.array().log() - (phi + a).array() / c).matrix();
  s.array() -= s.maxCoeff();
  Vector z = s.array().exp().matrix();
  z /= z.sum();
  return z;
}

struct IpmOutcome {
  Vector x;
  int iterations = 0;
  double residual = kInf;
};

/// Primal-dual interior-point method (Mehrotra predictor-corrector) for
///   min phi^T x + t + c D(x)  s.t.  a_i^T x <= t,  G x <= h,  E x = e,
/// where D(x) = B(x, y). Entropy iterates keep x > 0 through the
/// fraction-to-boundary rule. Stops as soon as the prox optimality residual
/// reaches tol.
template <class Residual>
IpmOutcome interior_point(const Vector& y, const Vector& phi, double c, bool entropy,
                          const Matrix& pieces, const LinearSet& lin, double tol, int max_iter,
                          Residual&& residual_of) {
  const Index n = y.size();
  const Index np = pieces.rows(), ng = lin.inequalities(), ne = lin.equalities();
  const Index nz = n + 1, m = np + ng;

  Matrix C = Matrix::Zero(m, nz);
  Vector d = Vector::Zero(m);
  C.topLeftCorner(np, n) = pieces;
  C.block(0, n, np, 1).setConstant(-1.0);
  if (ng) {
    C.bottomLeftCorner(ng, n) = lin.G;
    d.tail(ng) = lin.h;
  }
  Matrix E = Matrix::Zero(ne, nz);
  if (ne) E.leftCols(n) = lin.E;
  const Vector e = ne ? lin.e : Vector();

  Vector z(nz);
  z.head(n) = y;
  z[n] = (pieces * y).maxCoeff() + 1.0;
  Vector s = (d - C * z).cwiseMax(1.0);
  Vector lam = Vector::Ones(m);
  Vector nu = Vector::Zero(ne);

  const Vector by = entropy ? Vector(y.array().log().matrix()) : y;
  auto grad = [&](const Vector& zz) {
    Vector g(nz);
    const Vector x = zz.head(n);
    g.head(n) = phi + c * ((entropy ? Vector(x.array().log().matrix()) : x) - by);
    g[n] = 1.0;
    return g;
  };
  struct Res {
    Vector rd, rp, re;
    double norm(const Vector& sl, const Vector& la) const {
      double r = rd.lpNorm<Eigen::Infinity>();
      if (rp.size()) r = std::max(r, rp.lpNorm<Eigen::Infinity>());
      if (re.size()) r = std::max(r, re.lpNorm<Eigen::Infinity>());
      return std::max(r, sl.cwiseProduct(la).lpNorm<Eigen::Infinity>());
    }
  };
  auto residuals = [&](const Vector& zz, const Vector& sl, const Vector& la, const Vector& nn) {
    Res r;
    r.rd = grad(zz) + C.transpose() * la;
    if (ne) r.rd += E.transpose() * nn;
    r.rp = C * zz + sl - d;
    r.re = ne ? Vector(E * zz - e) : Vector();
    return r;
  };

  IpmOutcome out;
  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    const Res r = residuals(z, s, lam, nu);
    const double gap = s.dot(lam) / static_cast<double>(m);
    const double rnorm = r.norm(s, lam);
    if (rnorm <= 0.1 * tol) {
      const Vector x = z.head(n);
      const double res = residual_of(x);
      if (res <= tol) {
        out.x = x;
        out.residual = res;
        return out;
      }
    }

    // Condensed Newton system.
    Matrix K = Matrix::Zero(nz, nz);
    if (entropy)
      K.topLeftCorner(n, n).diagonal() = (c / z.head(n).array()).matrix();
    else
      K.topLeftCorner(n, n).diagonal().setConstant(c);
    const Vector W = lam.cwiseQuotient(s);
    K.noalias() += C.transpose() * W.asDiagonal() * C;
    Matrix KKT = Matrix::Zero(nz + ne, nz + ne);
    KKT.topLeftCorner(nz, nz) = K;
    if (ne) {
      KKT.topRightCorner(nz, ne) = E.transpose();
      KKT.bottomLeftCorner(ne, nz) = E;
    }
    const Eigen::FullPivLU<Matrix> lu(KKT);

    auto solve = [&](const Vector& rc, Vector& dz, Vector& ds, Vector& dl, Vector& dn) {
      Vector rhs(nz + ne);
      rhs.head(nz) = -r.rd - C.transpose() * (W.cwiseProduct(r.rp) + rc.cwiseQuotient(s));
      if (ne) rhs.tail(ne) = -r.re;
      const Vector sol = lu.solve(rhs);
      dz = sol.head(nz);
      dn = ne ? Vector(sol.tail(ne)) : Vector();
      dl = W.cwiseProduct(C * dz + r.rp) + rc.cwiseQuotient(s);
      ds = -r.rp - C * dz;
    };
    auto max_step = [&](const Vector& dz, const Vector& ds, const Vector& dl) {
      double a = 1.0;
      for (Index i = 0; i < m; ++i) {
        if (ds[i] < 0.0) a = std::min(a, -s[i] / ds[i]);
        if (dl[i] < 0.0) a = std::min(a, -lam[i] / dl[i]);
      }
      if (entropy)
        for (Index j = 0; j < n; ++j)
          if (dz[j] < 0.0) a = std::min(a, -z[j] / dz[j]);
      return a;
    };

    Vector dz, ds, dl, dn;
    solve(-s.cwiseProduct(lam), dz, ds, dl, dn);
    const double a_aff = max_step(dz, ds, dl);
    const double gap_aff = (s + a_aff * ds).dot(lam + a_aff * dl) / static_cast<double>(m);
    const double sigma = std::pow(std::max(gap_aff, 0.0) / std::max(gap, 1e-300), 3.0);
    const Vector rc = -s.cwiseProduct(lam) - ds.cwiseProduct(dl) +
                      Vector::Constant(m, std::min(sigma, 1.0) * gap);
    solve(rc, dz, ds, dl, dn);

    double alpha = std::min(1.0, 0.99 * max_step(dz, ds, dl));
    // Damping for the nonlinear objective: shrink until the KKT residual drops.
    for (int bt = 0; bt < 30; ++bt) {
      const Vector z2 = z + alpha * dz, s2 = s + alpha * ds, l2 = lam + alpha * dl;
      const Vector n2 = ne ? Vector(nu + alpha * dn) : Vector();
      if (residuals(z2, s2, l2, n2).norm(s2, l2) <= (1.0 - 1e-4 * alpha) * rnorm) break;
      alpha *= 0.5;
    }
    z += alpha * dz;
    s += alpha * ds;
    lam += alpha * dl;
    if (ne) nu += alpha * dn;
    if (entropy && z.head(n).minCoeff() <= 0.0) break;
  }
  out.x = z.head(n);
  if (!entropy || out.x.minCoeff() > 0.0) out.residual = residual_of(out.x);
  return out;
}

}  // namespace detail

/// Iterative prox for the cases without a coordinatewise closed form. The
/// entropy/simplex case with g linear on the simplex is solved exactly;
/// everything else with a polyhedral S goes to the interior-point method.
inline ProxResult generic_prox(const ProxSubproblem& sub, double tol, int max_iter = 200) {
  if (!(tol > 0.0)) throw InvalidParameter("generic_prox: tol must be positive");
  const auto& pb = sub.problem();
  const auto& geo = pb.geometry();
  const auto& g = pb.nonsmooth();
  const Index n = pb.dimension();
  const bool entropy = geo.is_entropy();
  const bool orthant = entropy || lies_in_orthant(sub.set());
  ProxResult res;

  const bool single_row = !g.is<MaxLinear>() || std::get<MaxLinear>(g.kind()).rows.rows() == 1;
  if (entropy && sub.set().is<Simplex>() && single_row) {
    const Vector a = g.linear_pieces(n, true).row(0).transpose();
    res.z = detail::entropy_simplex_prox(sub.y(), sub.grad_y(), a, sub.ratio());
    res.method = ProxMethod::EntropySimplex;
    if (res.z.minCoeff() <= 0.0) throw ProxFailure("entropy prox underflowed to the boundary");
    res.residual = optimality_residual(sub, res.z);
    if (res.residual > tol)
      throw MaxInnerIterations("entropy simplex prox residual " + std::to_string(res.residual) +
                               " above tolerance");
    return res;
  }

  const auto lin = linear_representation(sub.set(), n, orthant);
  if (!lin) throw InvalidParameter("no polyhedral description of " + sub.set().describe());
  const Matrix pieces = g.linear_pieces(n, orthant);
  auto residual_of = [&](const Vector& x) {
    if (!geo.in_zone(x) || !sub.set().contains(x)) return kInf;
    return optimality_residual(sub, x);
  };
  const auto out = detail::interior_point(sub.y(), sub.grad_y(), sub.ratio(), entropy, pieces, *lin,
                                          tol, max_iter, residual_of);
  res.method = ProxMethod::InteriorPoint;
  res.inner_iterations = out.iterations;
  if (!(out.residual <= tol))
    throw MaxInnerIterations("interior-point prox stopped at residual " +
                             std::to_string(out.residual) + " after " +
                             std::to_string(out.iterations) + " iterations");
  res.z = out.x;
  res.residual = out.residual;
  return res;
}

/// p_{L,mu,S}(y). Quadratic b with an l1 (or zero) term on a box or the
/// whole space uses the five-candidate closed form; all else is generic.
inline ProxResult prox_step(const ProxSubproblem& sub, double tol, bool certify = true) {
  const auto& pb = sub.problem();
  const auto& g = pb.nonsmooth();
  const auto rho = box_radius(sub.set());
  if (!pb.geometry().is_entropy() && rho && !g.is<MaxLinear>()) {
    const double lambda = g.is<ScaledL1>() ? std::get<ScaledL1>(g.kind()).lambda : 0.0;
    ProxResult res;
    res.z = box_l1_prox(sub.grad_y(), sub.y(), sub.ratio(), lambda, *rho);
    res.method = ProxMethod::ClosedFormBox;
    res.residual = certify ? optimality_residual(sub, res.z) : std::nan("");
    return res;
  }
  return generic_prox(sub, tol);
}

}  // namespace teprog
