// teprog: solve, certify, compare and generate composite problems.
//
// Exit codes: 0 ok, 1 certification failure, 2 input or contract error,
// 3 solver failure, 4 consistency error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "teprog.hpp"

namespace {

using namespace teprog;

enum Exit { kOk = 0, kCertFail = 1, kInput = 2, kSolver = 3, kConsistency = 4 };

unsigned thread_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TEPROG_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) hw = std::min(hw, static_cast<unsigned>(v));
  }
  return hw;
}

struct SolveArgs {
  std::string problem, out, rule, ref_out;
  double eta = 0.0, L1 = 0.0, inner_tol = 0.0;
  std::int64_t k_max = 0, ref_iterations = 0;
};

void apply_overrides(ProblemFile& f, const SolveArgs& a) {
  if (a.rule == "lipschitz") f.solver.rule = StepRule::Lipschitz;
  else if (a.rule == "backtracking") f.solver.rule = StepRule::Backtracking;
  else if (!a.rule.empty()) throw SchemaError("--rule: expected lipschitz or backtracking");
  if (a.eta > 0.0) f.solver.eta = a.eta;
  if (a.L1 > 0.0) f.solver.L1 = a.L1;
  if (a.inner_tol > 0.0) f.solver.inner_tol = a.inner_tol;
  if (a.k_max > 0) f.solver.k_max = a.k_max;
}

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

int cmd_solve(const SolveArgs& a) {
  ProblemFile f = load_problem(a.problem);
  apply_overrides(f, a);
  const auto& pb = f.problem;
  if (f.solver.rule == StepRule::Lipschitz) lipschitz_bound_at(pb, f.schedule, 1);

  Stepper st(pb, f.schedule, f.solver);
  RunTrace meta;
  meta.schedule = f.schedule.describe();
  meta.geometry = pb.geometry().describe();
  meta.problem = pb.describe();
  meta.rule = f.solver.rule;
  meta.eta = f.solver.eta;
  meta.L1 = st.L();
  meta.k_max = f.solver.k_max;
  json header = trace_header(f, meta);
  header["created"] = now_utc();

  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  auto lap = [&] {
    const auto t1 = clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    t0 = t1;
    return ms;
  };
  TraceWriter w(a.out, header, pb.dimension());
  w.append(st.record(lap()));
  while (st.k() < f.solver.k_max) {
    const ExtendedReal prev = st.F();
    try {
      st.step();
    } catch (const Error& e) {
      std::cerr << "solver failure at iteration " << st.k() + 1 << ": " << e.what() << "\n";
      return kSolver;
    }
    w.append(st.record(lap()));
    if (f.solver.stop_gap && prev.is_finite() && prev.value() - st.F().value() < *f.solver.stop_gap)
      break;
  }
  w.finish();
  std::cout << "wrote " << st.k() << " iterations to " << a.out << "; F = " << st.F().to_string()
            << "\n";

  if (!a.ref_out.empty()) {
    const std::int64_t iters = a.ref_iterations > 0 ? a.ref_iterations : 100 * f.solver.k_max;
    SolverConfig rc = f.solver;
    rc.inner_tol = std::min(rc.inner_tol, 1e-12);
    ReferenceSolution ref;
    try {
      ref = reference_solve(pb, f.schedule, rc, iters);
    } catch (const Error& e) {
      std::cerr << "reference solve failed: " << e.what() << "\n";
      return kSolver;
    }
    save_reference(a.ref_out, ReferenceFile{instance_hash(f), ref.x, ref.F, ref.iterations});
    std::cout << "reference after " << iters << " iterations: F = " << format_double(ref.F) << "\n";
  }
  return kOk;
}

struct CertifyArgs {
  std::string trace, problem, ref, report;
  double tol = 1e-8;
};

std::string list_k(const std::vector<std::int64_t>& ks) {
  std::ostringstream os;
  for (std::size_t i = 0; i < ks.size() && i < 20; ++i) os << (i ? "," : "") << ks[i];
  if (ks.size() > 20) os << ",... (" << ks.size() << " total)";
  return os.str();
}

int cmd_certify(const CertifyArgs& a) {
  const ProblemFile f = load_problem(a.problem);
  const TraceFile tf = read_trace(a.trace);
  const ReferenceFile ref = load_reference(a.ref);
  const std::string h = instance_hash(f);
  const std::string th = tf.header.value("instance_hash", "");
  if (th != h || ref.instance_hash != h) {
    std::cerr << "instance hash mismatch: problem " << h << ", trace " << th << ", reference "
              << ref.instance_hash << "\n";
    return kConsistency;
  }
  if (!tf.footer_present) {
    std::cerr << "trace has no footer (truncated after " << tf.trace.size() << " rows)\n";
    return kConsistency;
  }
  const auto& pb = f.problem;
  const auto& trace = tf.trace;
  if (ref.x_ref.size() != pb.dimension()) {
    std::cerr << "reference point has the wrong dimension\n";
    return kConsistency;
  }
  if (!trace.records.empty() && trace.records[0].x.size() != pb.dimension()) {
    std::cerr << "trace iterates have the wrong dimension\n";
    return kConsistency;
  }

  std::ostringstream rep;
  bool ok = true;
  auto line = [&](const std::string& name, const std::vector<std::int64_t>& bad) {
    rep << (bad.empty() ? "PASS " : "FAIL ") << name;
    if (!bad.empty()) rep << " at k = " << list_k(bad);
    rep << "\n";
    ok = ok && bad.empty();
  };

  std::vector<std::int64_t> recorded;
  for (const auto& r : trace.records) {
    const auto F = objective_value(pb, r.x);
    const bool same = F.is_finite() && r.F.is_finite()
                          ? std::abs(F.value() - r.F.value()) <= 1e-9 * (1.0 + std::abs(F.value()))
                          : F.kind() == r.F.kind();
    if (!same) recorded.push_back(r.k);
  }
  line("recorded F matches F(x_k)", recorded);

  std::vector<std::int64_t> bound_fail, mono_fail;
  try {
    const CertifiedBound cb = certify_trace(pb, trace, ref.x_ref, ref.F_ref, f.schedule, a.tol);
    for (const auto& e : cb.entries)
      if (!e.satisfied) bound_fail.push_back(e.k);
    rep << "# k0 = " << cb.k0 << ", B(x_ref, x_k0) = " << format_double(cb.B0)
        << (cb.tau_from_trace ? ", tau_k = L_k from the trace" : "") << "\n";
    const auto mono = bregman_monotonicity(pb.geometry(), trace, ref.x_ref, cb.k0);
    if (!mono.passed) mono_fail.push_back(*mono.first_violation);
  } catch (const ReferenceInfeasible& e) {
    rep << "FAIL reference: " << e.what() << "\n";
    ok = false;
  } catch (const NotFound& e) {
    rep << "FAIL reference: " << e.what() << "\n";
    ok = false;
  }
  line("theorem bound", bound_fail);
  line("Bregman monotonicity", mono_fail);

  const StepReport sr = check_steps(pb, f.schedule, trace);
  line("backtracking certificate F(x_k) <= Q(x_k, x_{k-1})", sr.certificate);
  line("sufficient decrease", sr.sufficient_decrease);
  line("L_k nondecreasing", sr.monotone_L);
  line("x_k in S_k ∩ U", sr.feasibility);
  if (trace.rule == StepRule::Backtracking) line("L_k <= eta bound_k", sr.backtracking_bound);

  if (!a.report.empty()) {
    std::ofstream os(a.report);
    os << rep.str();
  }
  std::cout << rep.str();
  if (!ok) return kCertFail;
  if (!tf.checksum_ok) {
    std::cerr << "trace checksum mismatch\n";
    return kConsistency;
  }
  return kOk;
}

struct CompareArgs {
  std::string problem, out;
  std::int64_t k_max = -1;
};

int cmd_compare(const CompareArgs& a) {
  ProblemFile f = load_problem(a.problem);
  const auto& pb = f.problem;
  const auto* t = std::get_if<LpResidual>(&pb.smooth().kind());
  if (!t || t->p != 2.0) throw SchemaError("compare: needs an lp_residual term with p = 2");
  if (pb.geometry().is_entropy()) throw SchemaError("compare: needs the quadratic geometry");
  if (f.schedule.growing()) throw SchemaError("compare: needs a constant schedule");
  if (!pb.constraint().is<WholeSpace>()) throw SchemaError("compare: needs C = R^n");
  if (pb.nonsmooth().is<MaxLinear>()) throw SchemaError("compare: needs an l1 or zero term");
  const std::int64_t K = a.k_max >= 0 ? a.k_max : f.solver.k_max;

  std::ofstream os;
  if (!a.out.empty()) {
    os.open(a.out);
    if (!os) throw SchemaError("cannot write " + a.out);
    os << "k,F_teprog,F_baseline,gap_teprog,gap_baseline,deviation_inf\n";
  }
  if (K == 0) {
    std::cout << "empty comparison; max deviation 0\n";
    return kOk;
  }

  SolverConfig cfg = f.solver;
  cfg.k_max = K;
  cfg.stop_gap.reset();
  const double lambda = pb.nonsmooth().is<ScaledL1>() ? std::get<ScaledL1>(pb.nonsmooth().kind()).lambda : 0.0;
  const Vector x1 = cfg.x1 ? *cfg.x1 : default_start(pb, f.schedule);

  RunTrace trace;
  std::vector<Vector> base;
  double L = 0.0;
  {
    // The baseline needs the step constant the TEPROG run settles on; with a
    // constant schedule and the Lipschitz rule that is L_1 throughout.
    cfg.rule = StepRule::Lipschitz;
    Stepper probe(pb, f.schedule, cfg);
    L = std::max(probe.L(), lipschitz_bound_at(pb, f.schedule, 2));
  }
  auto run_teprog = [&] { trace = run_lipschitz(pb, f.schedule, cfg); };
  auto run_base = [&] { base = ista(t->A, t->c, lambda, L, x1, static_cast<int>(K)); };
  if (thread_cap() >= 2) {
    std::thread th(run_base);
    run_teprog();
    th.join();
  } else {
    run_teprog();
    run_base();
  }

  auto F = [&](const Vector& x) { return objective_value(pb, x).value(); };
  double F_ref = kInf;
  for (std::int64_t k = 0; k < K; ++k)
    F_ref = std::min({F_ref, trace.records[static_cast<std::size_t>(k)].F.value(), F(base[static_cast<std::size_t>(k)])});
  double dev = 0.0;
  for (std::int64_t k = 0; k < K; ++k) {
    const auto& r = trace.records[static_cast<std::size_t>(k)];
    const double d = (r.x - base[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff();
    dev = std::max(dev, d);
    if (os.is_open()) {
      const double fb = F(base[static_cast<std::size_t>(k)]);
      os << r.k << "," << format_double(r.F.value()) << "," << format_double(fb) << ","
         << format_double(r.F.value() - F_ref) << "," << format_double(fb - F_ref) << ","
         << format_double(d) << "\n";
    }
  }
  std::cout << "iterations " << K << ", step constant " << format_double(L)
            << ", max iterate deviation " << format_double(dev) << "\n";
  return kOk;
}

struct GenArgs {
  std::uint64_t seed = 1;
  std::int64_t n = 20, m = 30, k_max = 10000;
  double p = 3.0, lambda = 0.1, density = 0.2, sigma = 0.0, noise = 0.01;
  std::string schedule = "power_box", rule = "lipschitz", out;
  bool blob = false;
};

int cmd_gen(const GenArgs& a) {
  GeneratedInstance gi = generate_instance(a.seed, a.n, a.m, a.p, a.lambda, a.density, a.noise);
  const SetDescriptor C = gi.problem.constraint();
  std::optional<TelescopicSchedule> sched;
  if (a.schedule == "power_box")
    sched = TelescopicSchedule::power_box(a.sigma > 0.0 ? a.sigma : default_power_sigma(a.p), C);
  else if (a.schedule == "constant")
    sched = TelescopicSchedule::constant(C);
  else
    throw SchemaError("--schedule: expected power_box or constant");
  SolverConfig cfg;
  cfg.k_max = a.k_max;
  if (a.rule == "backtracking") cfg.rule = StepRule::Backtracking;
  else if (a.rule != "lipschitz") throw SchemaError("--rule: expected lipschitz or backtracking");
  json meta = {{"generator", "lp_l1"}, {"seed", a.seed}, {"n", a.n}, {"m", a.m}, {"p", a.p},
               {"lambda", a.lambda}, {"density", a.density}, {"noise_factor", a.noise},
               {"noise_level", gi.noise_level}};
  ProblemFile f{std::move(gi.problem), std::move(*sched), cfg, meta};
  save_problem(a.out, f, a.blob);
  std::cout << "wrote " << a.out << " (instance " << instance_hash(f) << ")\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Telescoping Bregmanian proximal gradient solver"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "run TEPROG and write a trace");
  solve->add_option("--problem", sa.problem, "problem file")->required();
  solve->add_option("--out", sa.out, "trace file")->required();
  solve->add_option("--rule", sa.rule, "lipschitz or backtracking");
  solve->add_option("--eta", sa.eta, "backtracking factor");
  solve->add_option("--L1", sa.L1, "initial step constant");
  solve->add_option("--kmax", sa.k_max, "number of iterates");
  solve->add_option("--inner-tol", sa.inner_tol, "inner prox tolerance");
  solve->add_option("--ref-out", sa.ref_out, "also write a reference solution");
  solve->add_option("--ref-iterations", sa.ref_iterations, "reference iterations (default 100 k_max)");

  CertifyArgs ca;
  auto* certify = app.add_subcommand("certify", "check a trace against the rate bound and step inequalities");
  certify->add_option("--trace", ca.trace)->required();
  certify->add_option("--problem", ca.problem)->required();
  certify->add_option("--ref", ca.ref, "reference solution file")->required();
  certify->add_option("--report", ca.report, "write the report here");
  certify->add_option("--tol", ca.tol, "relative tolerance of the rate bound");

  CompareArgs cpa;
  auto* compare = app.add_subcommand("compare", "TEPROG against classical proximal gradient (p = 2)");
  compare->add_option("--problem", cpa.problem)->required();
  compare->add_option("--kmax", cpa.k_max, "iterations");
  compare->add_option("--out", cpa.out, "side-by-side CSV");

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "generate a seeded lp-l1 instance");
  gen->add_option("--seed", ga.seed);
  gen->add_option("--n", ga.n);
  gen->add_option("--m", ga.m);
  gen->add_option("--p", ga.p);
  gen->add_option("--lambda", ga.lambda);
  gen->add_option("--density", ga.density);
  gen->add_option("--noise", ga.noise, "noise as a fraction of ||A x_true||");
  gen->add_option("--sigma", ga.sigma, "power box exponent (default from p)");
  gen->add_option("--schedule", ga.schedule, "power_box or constant");
  gen->add_option("--rule", ga.rule);
  gen->add_option("--kmax", ga.k_max);
  gen->add_option("--out", ga.out)->required();
  gen->add_flag("--blob", ga.blob, "store A as a binary blob");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*solve) return cmd_solve(sa);
    if (*certify) return cmd_certify(ca);
    if (*compare) return cmd_compare(cpa);
    if (*gen) return cmd_gen(ga);
  } catch (const NoBoundAvailable& e) {
    std::cerr << "NoBoundAvailable: " << e.what() << "\n";
    return kInput;
  } catch (const SchemaError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const InvalidParameter& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const PreconditionViolation& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const ConsistencyError& e) {
    std::cerr << "consistency error: " << e.what() << "\n";
    return kConsistency;
  } catch (const Error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  }
  return kInput;
}
