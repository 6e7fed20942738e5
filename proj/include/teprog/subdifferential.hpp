#pragma once

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include "teprog/errors.hpp"
#include "teprog/linalg.hpp"

namespace teprog {

/// Membership oracle for a closed convex set of dual vectors, in one of two
/// forms:
///  - separable: a product of closed intervals [lo_j, hi_j] (bounds may be
///    infinite), as produced by l1 terms over boxes;
///  - polyhedral: conv(points) + cone(rays) + span(lines), as produced by
///    max-of-linear terms and polyhedral normal cones.
class Subdifferential {
 public:
  struct Separable {
    Vector lo, hi;
  };
  struct Polyhedral {
    Matrix points;  ///< generators of the convex hull, one per column (at least one)
    Matrix rays;    ///< conic generators, one per column
    Matrix lines;   ///< linear generators, one per column
  };

  static Subdifferential separable(Vector lo, Vector hi) {
    if (lo.size() != hi.size()) throw InvalidParameter("interval bounds differ in size");
    return Subdifferential(Separable{std::move(lo), std::move(hi)});
  }
  static Subdifferential polyhedral(Matrix points, Matrix rays, Matrix lines) {
    if (points.cols() == 0) throw InvalidParameter("polyhedral subdifferential needs a point");
    return Subdifferential(Polyhedral{std::move(points), std::move(rays), std::move(lines)});
  }

  const std::variant<Separable, Polyhedral>& form() const { return form_; }

  /// Distance from gamma to the set in the l_q norm. Exact for the separable
  /// form. For the polyhedral form the nearest point is found in the l2
  /// sense and its l_q distance is returned, which bounds the true l_q
  /// distance from above.
  double distance(const Vector& gamma, double q = kInf) const {
    if (const auto* s = std::get_if<Separable>(&form_)) {
      Vector d(gamma.size());
      for (Index j = 0; j < gamma.size(); ++j)
        d[j] = std::max({s->lo[j] - gamma[j], gamma[j] - s->hi[j], 0.0});
      return lp_norm(d, q);
    }
    return polyhedral_distance(std::get<Polyhedral>(form_), gamma, q);
  }

  bool contains(const Vector& gamma, double tol, double q = kInf) const {
    return distance(gamma, q) <= tol;
  }

 private:
  explicit Subdifferential(std::variant<Separable, Polyhedral> f) : form_(std::move(f)) {}

  // Enumerates the supports of the optimal combination. The l2 projection
  // onto conv(P) + cone(R) + span(L) is an unconstrained least-squares
  // solution on some support, so the best feasible support is optimal.
  static double polyhedral_distance(const Polyhedral& p, const Vector& gamma, double q) {
    const Index np = p.points.cols(), nr = p.rays.cols(), nl = p.lines.cols();
    if (np + nr > 18) throw InvalidParameter("too many active generators for exact projection");
    const Index n = gamma.size();
    double best = kInf;
    const unsigned long total = 1ul << (np + nr);
    for (unsigned long mask = 1; mask < total; ++mask) {
      std::vector<Index> pts, rys;
      for (Index i = 0; i < np; ++i)
        if (mask & (1ul << i)) pts.push_back(i);
      if (pts.empty()) continue;
      for (Index i = 0; i < nr; ++i)
        if (mask & (1ul << (np + i))) rys.push_back(i);

      const Vector anchor = p.points.col(pts.back());
      const Index cols = static_cast<Index>(pts.size() - 1 + rys.size()) + nl;
      Matrix M(n, cols);
      Index c = 0;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) M.col(c++) = p.points.col(pts[i]) - anchor;
      for (Index r : rys) M.col(c++) = p.rays.col(r);
      for (Index l = 0; l < nl; ++l) M.col(c++) = p.lines.col(l);
      const Vector target = gamma - anchor;
      Vector coef = Vector::Zero(cols);
      if (cols > 0) coef = M.completeOrthogonalDecomposition().solve(target);

      const Index nfree = static_cast<Index>(pts.size()) - 1;
      const double last = 1.0 - coef.head(nfree).sum();
      constexpr double kNeg = -1e-12;
      if (last < kNeg) continue;
      if (nfree > 0 && coef.head(nfree).minCoeff() < kNeg) continue;
      if (!rys.empty() && coef.segment(nfree, rys.size()).minCoeff() < kNeg) continue;
      const Vector residual = cols > 0 ? Vector(target - M * coef) : target;
      best = std::min(best, lp_norm(residual, q));
    }
    return best;
  }

  std::variant<Separable, Polyhedral> form_;
};

}  // namespace teprog
