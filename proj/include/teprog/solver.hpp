#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "teprog/errors.hpp"
#include "teprog/extended_real.hpp"
#include "teprog/linalg.hpp"
#include "teprog/problems.hpp"
#include "teprog/prox.hpp"
#include "teprog/telescope.hpp"

namespace teprog {

struct SolverConfig {
  StepRule rule = StepRule::Lipschitz;
  double eta = 2.0;            ///< backtracking factor, > 1
  std::optional<double> L1;    ///< default: the Lipschitz bound on S_1 (1 if none exists)
  std::int64_t k_max = 1000;   ///< number of recorded iterates, x_1 included
  double inner_tol = 1e-10;    ///< residual tolerance of iterative prox solves
  std::optional<double> stop_gap;
  int backtrack_cap = 64;
  std::optional<Vector> x1;
  bool certify_steps = true;   ///< evaluate the prox optimality residual on closed-form steps

  bool operator==(const SolverConfig& o) const {
    auto same_x1 = [&] {
      if (x1.has_value() != o.x1.has_value()) return false;
      return !x1 || (x1->size() == o.x1->size() && *x1 == *o.x1);
    };
    return rule == o.rule && eta == o.eta && L1 == o.L1 && k_max == o.k_max &&
           inner_tol == o.inner_tol && stop_gap == o.stop_gap && backtrack_cap == o.backtrack_cap &&
           same_x1();
  }
};

struct IterationRecord {
  std::int64_t k = 1;
  Vector x;
  ExtendedReal F;
  double L = 0.0;
  double mu = 0.0;
  int i_k = 0;
  double step_norm = 0.0;  ///< ||x_k - x_{k-1}|| in the geometry's norm
  double wall_ms = 0.0;
  double residual = 0.0;   ///< prox optimality residual (NaN when not evaluated)
};

struct RunTrace {
  std::string schedule;
  std::string geometry;
  std::string problem;
  StepRule rule = StepRule::Lipschitz;
  double eta = 2.0;
  double L1 = 0.0;
  std::int64_t k_max = 0;
  std::vector<IterationRecord> records;

  std::size_t size() const { return records.size(); }
  const IterationRecord& at_k(std::int64_t k) const {
    if (k < 1 || static_cast<std::size_t>(k) > records.size())
      throw InvalidParameter("iteration " + std::to_string(k) + " is not in the trace");
    return records[static_cast<std::size_t>(k - 1)];
  }
};

/// Default x_1: the origin when it lies in S_1 ∩ U, otherwise the stored
/// witness of S_1 ∩ U (the barycenter for simplex-type sets).
inline Vector default_start(const CompositeProblem& pb, const TelescopicSchedule& schedule) {
  const Index n = pb.dimension();
  const SetDescriptor s1 = schedule.set_at(1);
  const Vector origin = Vector::Zero(n);
  if (pb.geometry().in_zone(origin) && s1.contains(origin)) return origin;
  if (pb.geometry().in_zone(pb.witness()) && s1.contains(pb.witness())) return pb.witness();
  return interior_witness(s1, n, pb.geometry().is_entropy());
}

inline double default_L1(const CompositeProblem& pb, const TelescopicSchedule& schedule) {
  try {
    return lipschitz_bound_at(pb, schedule, 1);
  } catch (const NoBoundAvailable&) {
    return 1.0;
  }
}

/// Drives one TEPROG run step by step. Both outer loops and the trace-free
/// reference solve are built on it.
class Stepper {
 public:
  Stepper(const CompositeProblem& pb, const TelescopicSchedule& schedule, const SolverConfig& cfg)
      : pb_(pb), schedule_(schedule), cfg_(cfg) {
    if (!(cfg.k_max >= 1)) throw InvalidParameter("k_max must be >= 1");
    if (!(cfg.inner_tol > 0.0)) throw InvalidParameter("inner_tol must be positive");
    if (schedule.constraint() != pb.constraint())
      throw InvalidParameter("schedule and problem use different constraint sets");
    L_ = cfg.L1 ? *cfg.L1 : default_L1(pb, schedule);
    if (!(L_ > 0.0) || !std::isfinite(L_)) throw InvalidParameter("L1 must be positive");

    std::optional<double> bound1;
    try {
      bound1 = lipschitz_bound_at(pb, schedule, 1);
    } catch (const NoBoundAvailable&) {
      if (cfg.rule == StepRule::Lipschitz) throw;
    }
    if (cfg.rule == StepRule::Lipschitz) {
      if (L_ < *bound1)
        throw PreconditionViolation("L1 is below the Lipschitz bound on S_1");
    } else {
      if (!(cfg.eta > 1.0)) throw InvalidParameter("backtracking factor eta must be > 1");
      if (cfg.backtrack_cap < 0) throw InvalidParameter("backtrack cap must be >= 0");
      if (schedule.growing() && bound1 && L_ > cfg.eta * *bound1)
        throw PreconditionViolation("L1 exceeds eta times the Lipschitz bound on S_1");
    }

    x_ = cfg.x1 ? *cfg.x1 : default_start(pb, schedule);
    if (x_.size() != pb.dimension()) throw PreconditionViolation("x1 has the wrong dimension");
    const SetDescriptor s1 = schedule.set_at(1);
    if (!s1.contains(x_)) throw PreconditionViolation("x1 is not in S_1");
    if (!pb.geometry().in_zone(x_)) throw PreconditionViolation("x1 is not in the zone U");
    F_ = objective_value(pb, x_);
    mu_ = mu_at(pb.geometry(), schedule, 1);
  }

  std::int64_t k() const { return k_; }
  const Vector& x() const { return x_; }
  const ExtendedReal& F() const { return F_; }
  double L() const { return L_; }
  double mu() const { return mu_; }

  IterationRecord record(double wall_ms = 0.0) const {
    IterationRecord r;
    r.k = k_;
    r.x = x_;
    r.F = F_;
    r.L = L_;
    r.mu = mu_;
    r.i_k = i_k_;
    r.step_norm = step_norm_;
    r.wall_ms = wall_ms;
    r.residual = residual_;
    return r;
  }

  /// Computes x_{k+1} from x_k.
  void step() {
    const std::int64_t k = k_ + 1;
    const SetDescriptor S = schedule_.set_at(k);
    const double mu = mu_at(pb_.geometry(), schedule_, k);
    ProxResult out;
    int i_k = 0;
    double L = L_;

    auto prox = [&](double LL) {
      try {
        const ProxSubproblem sub(pb_, x_, LL, mu, S);
        return std::pair{sub.f_y(), prox_step(sub, cfg_.inner_tol, cfg_.certify_steps)};
      } catch (const MaxInnerIterations& e) {
        throw ProxFailure("iteration " + std::to_string(k) + ": " + e.what());
      } catch (const DomainError& e) {
        throw ProxFailure("iteration " + std::to_string(k) + ": " + e.what());
      }
    };

    if (cfg_.rule == StepRule::Lipschitz) {
      L = std::max(L_, lipschitz_bound_at(pb_, schedule_, k));
      out = prox(L).second;
    } else {
      for (;; ++i_k) {
        if (i_k > cfg_.backtrack_cap)
          throw BacktrackOverflow("iteration " + std::to_string(k) + ": backtracking exceeded " +
                                  std::to_string(cfg_.backtrack_cap) + " doublings");
        const ProxSubproblem sub(pb_, x_, L, mu, S);
        try {
          out = prox_step(sub, cfg_.inner_tol, cfg_.certify_steps);
        } catch (const MaxInnerIterations& e) {
          throw ProxFailure("iteration " + std::to_string(k) + ": " + e.what());
        }
        const ExtendedReal Fz = objective_value(pb_, out.z);
        const double Q = surrogate_value(sub, out.z).value();
        if (Fz.is_finite() && Fz.value() <= Q + 1e-12 * (1.0 + std::abs(Q))) break;
        L *= cfg_.eta;
      }
    }

    if (!pb_.geometry().in_zone(out.z) || !S.contains(out.z))
      throw InvariantViolation("iteration " + std::to_string(k) + ": x_k left S_k ∩ U");
    const ExtendedReal F = objective_value(pb_, out.z);
    if (!F.is_finite())
      throw InvariantViolation("iteration " + std::to_string(k) + ": F(x_k) is not finite");

    step_norm_ = pb_.geometry().norm(out.z - x_);
    x_ = std::move(out.z);
    F_ = F;
    L_ = L;
    mu_ = mu;
    i_k_ = i_k;
    residual_ = out.residual;
    k_ = k;
  }

 private:
  const CompositeProblem& pb_;
  const TelescopicSchedule& schedule_;
  SolverConfig cfg_;
  std::int64_t k_ = 1;
  Vector x_;
  ExtendedReal F_;
  double L_ = 0.0, mu_ = 0.0;
  int i_k_ = 0;
  double step_norm_ = 0.0;
  double residual_ = 0.0;
};

namespace detail {

inline RunTrace run(const CompositeProblem& pb, const TelescopicSchedule& schedule,
                    const SolverConfig& cfg) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  Stepper st(pb, schedule, cfg);
  RunTrace trace;
  trace.schedule = schedule.describe();
  trace.geometry = pb.geometry().describe();
  trace.problem = pb.describe();
  trace.rule = cfg.rule;
  trace.eta = cfg.eta;
  trace.L1 = st.L();
  trace.k_max = cfg.k_max;
  trace.records.reserve(static_cast<std::size_t>(std::min<std::int64_t>(cfg.k_max, 1 << 20)));
  auto elapsed = [&] {
    auto t1 = clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    t0 = t1;
    return ms;
  };
  trace.records.push_back(st.record(elapsed()));
  while (st.k() < cfg.k_max) {
    const ExtendedReal prev = st.F();
    st.step();
    trace.records.push_back(st.record(elapsed()));
    if (cfg.stop_gap && prev.is_finite() && prev.value() - st.F().value() < *cfg.stop_gap) break;
  }
  return trace;
}

}  // namespace detail

/// Algorithm with the Lipschitz step-size rule: L_k = max(L_{k-1}, bound_k).
inline RunTrace run_lipschitz(const CompositeProblem& pb, const TelescopicSchedule& schedule,
                              SolverConfig cfg) {
  cfg.rule = StepRule::Lipschitz;
  return detail::run(pb, schedule, cfg);
}

/// Algorithm with the backtracking rule: smallest i_k with
/// F(p(x_{k-1})) <= Q(p(x_{k-1}), x_{k-1}) at L_k = eta^{i_k} L_{k-1}.
inline RunTrace run_backtracking(const CompositeProblem& pb, const TelescopicSchedule& schedule,
                                 SolverConfig cfg) {
  cfg.rule = StepRule::Backtracking;
  return detail::run(pb, schedule, cfg);
}

inline RunTrace run_solver(const CompositeProblem& pb, const TelescopicSchedule& schedule,
                           const SolverConfig& cfg) {
  return detail::run(pb, schedule, cfg);
}

struct ReferenceSolution {
  Vector x;
  double F = 0.0;
  std::int64_t iterations = 0;
};

/// Runs the same method for `iterations` steps without recording and
/// returns the best iterate seen.
inline ReferenceSolution reference_solve(const CompositeProblem& pb,
                                         const TelescopicSchedule& schedule, SolverConfig cfg,
                                         std::int64_t iterations) {
  cfg.k_max = iterations;
  cfg.stop_gap.reset();
  cfg.certify_steps = false;
  Stepper st(pb, schedule, cfg);
  ReferenceSolution best{st.x(), st.F().is_finite() ? st.F().value() : kInf, 1};
  while (st.k() < iterations) {
    st.step();
    if (st.F().value() <= best.F) {
      best.x = st.x();
      best.F = st.F().value();
    }
  }
  best.iterations = iterations;
  return best;
}

}  // namespace teprog
