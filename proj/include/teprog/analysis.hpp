#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "teprog/errors.hpp"
#include "teprog/extended_real.hpp"
#include "teprog/geometry.hpp"
#include "teprog/linalg.hpp"
#include "teprog/problems.hpp"
#include "teprog/prox.hpp"
#include "teprog/solver.hpp"
#include "teprog/telescope.hpp"

namespace teprog {

/// tau_{k+1} B0 / ((k + 1 - k0) mu_{k+1}).
inline double theorem_bound(std::int64_t k, std::int64_t k0, double tau_next, double mu_next,
                            double B0) {
  if (k0 < 1) throw InvalidParameter("k0 must be >= 1");
  if (k < k0) throw InvalidParameter("theorem bound needs k >= k0");
  if (!(tau_next > 0.0) || !(mu_next > 0.0)) throw InvalidParameter("tau and mu must be positive");
  if (!(B0 >= 0.0)) throw InvalidParameter("B0 must be nonnegative");
  return tau_next * B0 / (static_cast<double>(k + 1 - k0) * mu_next);
}

struct BoundEntry {
  std::int64_t k = 0;  ///< the bound concerns x_{k+1}
  double gap = 0.0;
  double bound = 0.0;
  bool satisfied = true;
};

struct CertifiedBound {
  std::int64_t k0 = 1;
  Vector x_ref;
  double F_ref = 0.0;
  double B0 = 0.0;
  bool tau_from_trace = false;  ///< no closed-form bound; tau_k = L_k of the trace
  std::vector<BoundEntry> entries;
  bool all_satisfied = true;
  std::optional<std::int64_t> first_failure;
};

/// The step-size parameters behind tau_k. Built from the trace by default.
struct TauRule {
  StepRule rule = StepRule::Lipschitz;
  double eta = 2.0;
  double L1 = 1.0;
  static TauRule of(const RunTrace& t) { return TauRule{t.rule, t.eta, t.L1}; }
};

/// Evaluates the rate bound for every k >= k0 with x_{k+1} in the trace. F
/// is recomputed from the recorded iterates. The bound holds for any x_ref
/// in S_{k0} whose value is below every F(x_k), which is what the
/// preconditions enforce; tol scales with 1 + |F_ref|.
inline CertifiedBound certify_trace(const CompositeProblem& pb, const RunTrace& trace,
                                    const Vector& x_ref, double F_ref,
                                    const TelescopicSchedule& schedule, double tol = 1e-8,
                                    std::optional<TauRule> tau_rule = std::nullopt) {
  if (trace.records.empty()) throw InvalidParameter("empty trace");
  if (x_ref.size() != pb.dimension() || !pb.constraint().contains(x_ref) ||
      !pb.geometry().in_domain(x_ref))
    throw ReferenceInfeasible("reference point is not in C ∩ dom(b)");
  const double slack = tol * (1.0 + std::abs(F_ref));
  std::vector<double> F(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto v = objective_value(pb, trace.records[i].x);
    F[i] = v.is_finite() ? v.value() : kInf;
    if (F[i] < F_ref - slack)
      throw ReferenceInfeasible("F_ref is above F(x_" + std::to_string(trace.records[i].k) + ")");
  }
  const TauRule rule = tau_rule ? *tau_rule : TauRule::of(trace);

  CertifiedBound cb;
  cb.x_ref = x_ref;
  cb.F_ref = F_ref;
  cb.k0 = find_k0(schedule, x_ref, std::isfinite(F[0]));
  const auto K = static_cast<std::int64_t>(trace.size());
  if (cb.k0 > K) return cb;
  const Vector& x_k0 = trace.at_k(cb.k0).x;
  cb.B0 = bregman_value(pb.geometry(), x_ref, x_k0);

  for (std::int64_t k = cb.k0; k + 1 <= K; ++k) {
    const auto& next = trace.at_k(k + 1);
    double tau;
    try {
      tau = tau_at(pb, schedule, rule.rule, rule.eta, rule.L1, k + 1);
    } catch (const NoBoundAvailable&) {
      tau = next.L;
      cb.tau_from_trace = true;
    }
    const double mu = mu_at(pb.geometry(), schedule, k + 1);
    BoundEntry e;
    e.k = k;
    e.gap = F[static_cast<std::size_t>(k)] - F_ref;
    e.bound = theorem_bound(k, cb.k0, tau, mu, cb.B0);
    e.satisfied = e.gap <= e.bound + slack;
    if (!e.satisfied && cb.all_satisfied) {
      cb.all_satisfied = false;
      cb.first_failure = k;
    }
    cb.entries.push_back(e);
  }
  return cb;
}

struct SampleCheck {
  bool passed = true;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_excess = -kInf;  ///< max of (lhs - rhs) / scale over samples
};

/// f(x) <= f(y) + <f'(y), x - y> + L ||x - y||^2 / 2 on sampled x, y in
/// set ∩ U; tolerance tol (1 + |rhs|).
template <class Rng>
SampleCheck check_descent_lemma(const CompositeProblem& pb, const SetDescriptor& set, double L,
                                std::size_t samples, Rng& rng, double tol = 1e-9) {
  const auto& geo = pb.geometry();
  const Index n = pb.dimension();
  SampleCheck out;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vector x = sample_point(set, n, rng, geo.is_entropy());
    const Vector y = sample_point(set, n, rng, geo.is_entropy());
    const double d = geo.norm(x - y);
    const double rhs = pb.smooth().value(y) + pb.smooth().gradient(y).dot(x - y) + 0.5 * L * d * d;
    const double excess = (pb.smooth().value(x) - rhs) / (1.0 + std::abs(rhs));
    out.worst_excess = std::max(out.worst_excess, excess);
    if (excess > tol) ++out.violations;
    ++out.samples;
  }
  out.passed = out.violations == 0;
  return out;
}

/// F(x) - F(z) >= (L/mu) (B(x, z) - B(x, y)) for sampled x in set ∩ dom(b),
/// plus x = y and x = z. With verify_step the pair (y, z) must first pass
/// the step certificate: prox residual <= 1e-8 and F(z) <= Q(z, y).
template <class Rng>
SampleCheck check_fb_inequality(const CompositeProblem& pb, const SetDescriptor& set, double L,
                                double mu, const Vector& y, const Vector& z, std::size_t samples,
                                Rng& rng, double tol = 1e-9, bool verify_step = true) {
  const auto& geo = pb.geometry();
  const Index n = pb.dimension();
  const ProxSubproblem sub(pb, y, L, mu, set);
  if (verify_step) {
    const double r = optimality_residual(sub, z);
    if (!(r <= 1e-8))
      throw PreconditionViolation("z is not the prox of y (residual " + std::to_string(r) + ")");
    const double Fz = objective_value(pb, z).value();
    const double Q = surrogate_value(sub, z).value();
    if (!(Fz <= Q + 1e-12 * (1.0 + std::abs(Q))))
      throw PreconditionViolation("F(z) > Q(z, y)");
  }
  const double Fz = objective_value(pb, z).value();
  const double ratio = L / mu;
  SampleCheck out;
  auto test = [&](const Vector& x) {
    const auto Fx = objective_value(pb, x);
    if (!Fx.is_finite()) return;
    const double lhs = Fx.value() - Fz;
    const double rhs = ratio * (bregman_value(geo, x, z) - bregman_value(geo, x, y));
    const double excess = (rhs - lhs) / (1.0 + std::abs(Fx.value()));
    out.worst_excess = std::max(out.worst_excess, excess);
    if (excess > tol) ++out.violations;
    ++out.samples;
  };
  test(y);
  test(z);
  for (std::size_t s = 0; s < samples; ++s) test(sample_point(set, n, rng, geo.is_entropy()));
  out.passed = out.violations == 0;
  return out;
}

struct MonotonicityCheck {
  bool passed = true;
  std::optional<std::int64_t> first_violation;  ///< k with B(x_ref, x_{k+1}) > B(x_ref, x_k) + tol
};

/// B(x_ref, x_{k+1}) <= B(x_ref, x_k) + tol for all k >= k0 in the trace.
inline MonotonicityCheck bregman_monotonicity(const BregmanGeometry& geo, const RunTrace& trace,
                                              const Vector& x_ref, std::int64_t k0,
                                              double tol = 1e-9) {
  MonotonicityCheck out;
  const auto K = static_cast<std::int64_t>(trace.size());
  if (K == 0 || k0 >= K) return out;
  double prev = bregman_value(geo, x_ref, trace.at_k(std::max<std::int64_t>(k0, 1)).x);
  for (std::int64_t k = std::max<std::int64_t>(k0, 1); k + 1 <= K; ++k) {
    const double next = bregman_value(geo, x_ref, trace.at_k(k + 1).x);
    if (next > prev + tol) {
      out.passed = false;
      out.first_violation = k;
      return out;
    }
    prev = next;
  }
  return out;
}

/// Per-step checks over a trace, each listing the failing k.
struct StepReport {
  std::vector<std::int64_t> certificate;        ///< F(x_k) > Q(x_k, x_{k-1})
  std::vector<std::int64_t> sufficient_decrease;
  std::vector<std::int64_t> monotone_L;
  std::vector<std::int64_t> feasibility;        ///< x_k not in S_k ∩ U
  std::vector<std::int64_t> backtracking_bound; ///< L_k > eta bound_k (growing schedules)

  bool passed() const {
    return certificate.empty() && sufficient_decrease.empty() && monotone_L.empty() &&
           feasibility.empty() && backtracking_bound.empty();
  }
};

/// Recomputes F, Q and B from the recorded iterates and L_k, mu_k.
/// certificate_tol multiplies 1 + |Q|, decrease_tol multiplies 1 + |F(x_k)|.
inline StepReport check_steps(const CompositeProblem& pb, const TelescopicSchedule& schedule,
                              const RunTrace& trace, double certificate_tol = 1e-12,
                              double decrease_tol = 1e-9) {
  const auto& geo = pb.geometry();
  StepReport rep;
  const auto K = static_cast<std::int64_t>(trace.size());
  for (std::int64_t k = 1; k <= K; ++k) {
    const auto& r = trace.at_k(k);
    if (!geo.in_zone(r.x) || !schedule.set_at(k).contains(r.x)) rep.feasibility.push_back(k);
  }
  for (std::int64_t k = 2; k <= K; ++k) {
    const auto& prev = trace.at_k(k - 1);
    const auto& cur = trace.at_k(k);
    if (cur.L < prev.L) rep.monotone_L.push_back(k);
    if (trace.rule == StepRule::Backtracking && schedule.growing()) {
      try {
        if (cur.L > trace.eta * lipschitz_bound_at(pb, schedule, k) * (1.0 + 1e-12))
          rep.backtracking_bound.push_back(k);
      } catch (const NoBoundAvailable&) {
      }
    }
    if (!geo.in_zone(prev.x) || !geo.in_domain(cur.x) || !(cur.L > 0.0) || !(cur.mu > 0.0) ||
        !pb.constraint().contains(cur.x)) {
      rep.certificate.push_back(k);
      rep.sufficient_decrease.push_back(k);
      continue;
    }
    const double ratio = cur.L / cur.mu;
    const auto Fk = objective_value(pb, cur.x);
    const auto Fprev = objective_value(pb, prev.x);
    const double Q = pb.smooth().value(prev.x) + pb.smooth().gradient(prev.x).dot(cur.x - prev.x) +
                     ratio * bregman_value(geo, cur.x, prev.x) + pb.nonsmooth().value(cur.x);
    if (!Fk.is_finite() || Fk.value() > Q + certificate_tol * (1.0 + std::abs(Q)))
      rep.certificate.push_back(k);
    if (Fprev.is_finite() && Fk.is_finite()) {
      const double dec = Fprev.value() - Fk.value();
      if (dec < ratio * bregman_value(geo, prev.x, cur.x) -
                    decrease_tol * (1.0 + std::abs(Fk.value())))
        rep.sufficient_decrease.push_back(k);
    } else if (!Fk.is_finite()) {
      rep.sufficient_decrease.push_back(k);
    }
  }
  return rep;
}

/// Least-squares slope of log(gap) against log(k).
inline double fit_empirical_rate(const std::vector<double>& ks, const std::vector<double>& gaps) {
  if (ks.size() != gaps.size()) throw InvalidParameter("rate fit: size mismatch");
  if (ks.size() < 2) throw DegenerateWindow("rate fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!(gaps[i] > 0.0) || !std::isfinite(gaps[i]) || !(ks[i] > 0.0))
      throw DegenerateWindow("nonpositive or non-finite gap at k = " + std::to_string(ks[i]));
    const double x = std::log(ks[i]), y = std::log(gaps[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = m * sxx - sx * sx;
  if (!(den > 0.0)) throw DegenerateWindow("rate fit window has a single abscissa");
  return (m * sxy - sx * sy) / den;
}

/// Slope over k in [k_lo, k_hi] of the gap F(x_k) - F_ref.
inline double fit_empirical_rate(const RunTrace& trace, double F_ref, std::int64_t k_lo,
                                 std::int64_t k_hi) {
  std::vector<double> ks, gaps;
  for (const auto& r : trace.records) {
    if (r.k < k_lo || r.k > k_hi) continue;
    ks.push_back(static_cast<double>(r.k));
    gaps.push_back(r.F.is_finite() ? r.F.value() - F_ref : kInf);
  }
  return fit_empirical_rate(ks, gaps);
}

}  // namespace teprog
