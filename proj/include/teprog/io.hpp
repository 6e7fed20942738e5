#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "teprog/errors.hpp"
#include "teprog/extended_real.hpp"
#include "teprog/geometry.hpp"
#include "teprog/linalg.hpp"
#include "teprog/problems.hpp"
#include "teprog/sets.hpp"
#include "teprog/solver.hpp"
#include "teprog/telescope.hpp"

namespace teprog {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = kFnvOffset) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Dense binary matrices: uint32 LE rows, uint32 LE cols, row-major float64 LE
// ---------------------------------------------------------------------------

namespace detail {

inline bool little_endian_host() {
  const std::uint16_t one = 1;
  unsigned char b;
  std::memcpy(&b, &one, 1);
  return b == 1;
}

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if (!little_endian_host()) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw SchemaError("blob is truncated");
  if (!little_endian_host()) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_blob(const std::filesystem::path& path, const Matrix& M) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SchemaError("cannot write blob " + path.string());
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(M.rows()));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(M.cols()));
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) detail::put_le<double>(os, M(i, j));
}

inline Matrix read_blob(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SchemaError("cannot read blob " + path.string());
  const auto m = detail::get_le<std::uint32_t>(is);
  const auto n = detail::get_le<std::uint32_t>(is);
  Matrix M(m, n);
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) M(i, j) = detail::get_le<double>(is);
  if (is.peek() != std::char_traits<char>::eof()) throw SchemaError("blob has trailing bytes");
  return M;
}

// ---------------------------------------------------------------------------
// Problem files
// ---------------------------------------------------------------------------

struct ProblemFile {
  CompositeProblem problem;
  TelescopicSchedule schedule;
  SolverConfig solver;
  json meta = json::object();
};

namespace detail {

inline void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) throw SchemaError(where + "." + k + ": unknown key");
  }
}

inline const json& need(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw SchemaError(where + "." + key + ": missing");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (j.is_string() && (j == "inf" || j == "infinity")) return kInf;
  if (!j.is_number()) throw SchemaError(where + ": expected a number");
  return j.get<double>();
}

inline std::int64_t integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw SchemaError(where + ": expected an integer");
  return j.get<std::int64_t>();
}

inline std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw SchemaError(where + ": expected a string");
  return j.get<std::string>();
}

inline Vector vector_of(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Index>(i)] = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix matrix_of(const json& j, const std::string& where, const std::filesystem::path& base) {
  if (j.is_object()) {
    allow_keys(j, where, {"blob"});
    std::filesystem::path p = text(need(j, where, "blob"), where + ".blob");
    if (p.is_relative()) p = base / p;
    return read_blob(p);
  }
  if (!j.is_array() || j.empty()) throw SchemaError(where + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix M(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != cols) throw SchemaError(w + ": ragged or non-array row");
    for (std::size_t c = 0; c < cols; ++c)
      M(static_cast<Index>(i), static_cast<Index>(c)) = number(j[i][c], w + "[" + std::to_string(c) + "]");
  }
  return M;
}

inline json number_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

inline json vector_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json matrix_json(const Matrix& M) {
  json a = json::array();
  for (Index i = 0; i < M.rows(); ++i) a.push_back(vector_json(M.row(i).transpose()));
  return a;
}

inline SetDescriptor parse_set(const json& j, const std::string& where) {
  allow_keys(j, where, {"shape", "radius", "norm_exponent", "center", "parts"});
  const std::string shape = text(need(j, where, "shape"), where + ".shape");
  auto only = [&](std::initializer_list<const char*> keys) { allow_keys(j, where, keys); };
  if (shape == "whole_space") {
    only({"shape"});
    return SetDescriptor::whole_space();
  }
  if (shape == "box") {
    only({"shape", "radius"});
    return SetDescriptor::box(number(need(j, where, "radius"), where + ".radius"));
  }
  if (shape == "ball") {
    only({"shape", "radius", "norm_exponent", "center"});
    const double r = number(need(j, where, "radius"), where + ".radius");
    const double p = j.contains("norm_exponent") ? number(j["norm_exponent"], where + ".norm_exponent") : 2.0;
    Vector c = j.contains("center") ? vector_of(j["center"], where + ".center") : Vector();
    return SetDescriptor::ball(r, p, std::move(c));
  }
  if (shape == "simplex") {
    only({"shape"});
    return SetDescriptor::simplex();
  }
  if (shape == "prism") {
    only({"shape"});
    return SetDescriptor::prism();
  }
  if (shape == "intersection") {
    only({"shape", "parts"});
    const json& parts = need(j, where, "parts");
    if (!parts.is_array() || parts.empty()) throw SchemaError(where + ".parts: expected a non-empty array");
    std::vector<SetDescriptor> v;
    for (std::size_t i = 0; i < parts.size(); ++i)
      v.push_back(parse_set(parts[i], where + ".parts[" + std::to_string(i) + "]"));
    return SetDescriptor(Intersection{std::move(v)});
  }
  throw SchemaError(where + ".shape: unknown shape '" + shape + "'");
}

inline json set_json(const SetDescriptor& s) {
  json j;
  if (s.is<WholeSpace>()) {
    j["shape"] = "whole_space";
  } else if (const auto* b = std::get_if<Box>(&s.shape())) {
    j["shape"] = "box";
    j["radius"] = b->radius;
  } else if (const auto* b = std::get_if<Ball>(&s.shape())) {
    j["shape"] = "ball";
    j["radius"] = b->radius;
    j["norm_exponent"] = number_json(b->norm_exponent);
    if (b->center.size()) j["center"] = vector_json(b->center);
  } else if (s.is<Simplex>()) {
    j["shape"] = "simplex";
  } else if (s.is<Prism>()) {
    j["shape"] = "prism";
  } else {
    j["shape"] = "intersection";
    j["parts"] = json::array();
    for (const auto& p : std::get<Intersection>(s.shape()).parts) j["parts"].push_back(set_json(p));
  }
  return j;
}

}  // namespace detail

/// Builds the in-memory instance; every error names the offending field.
inline ProblemFile problem_from_json(const json& j, const std::filesystem::path& base = ".") {
  using namespace detail;
  allow_keys(j, "problem", {"geometry", "smooth", "nonsmooth", "constraint", "schedule", "solver", "meta"});
  try {
    const json& jg = need(j, "problem", "geometry");
    allow_keys(jg, "geometry", {"kind", "dimension", "norm_exponent"});
    const std::string gk = text(need(jg, "geometry", "kind"), "geometry.kind");
    const std::int64_t n = integer(need(jg, "geometry", "dimension"), "geometry.dimension");
    if (n < 1) throw SchemaError("geometry.dimension: must be >= 1");
    std::optional<BregmanGeometry> geo;
    if (gk == "half_squared_euclidean") {
      const double r = jg.contains("norm_exponent") ? number(jg["norm_exponent"], "geometry.norm_exponent") : 2.0;
      geo = BregmanGeometry::half_squared_euclidean(n, r);
    } else if (gk == "negative_entropy") {
      const double r = jg.contains("norm_exponent") ? number(jg["norm_exponent"], "geometry.norm_exponent") : 1.0;
      geo = BregmanGeometry::negative_entropy(n, r);
    } else {
      throw SchemaError("geometry.kind: unknown kind '" + gk + "'");
    }

    const json& js = need(j, "problem", "smooth");
    allow_keys(js, "smooth", {"kind", "p", "A", "c"});
    const std::string sk = text(need(js, "smooth", "kind"), "smooth.kind");
    std::optional<SmoothTerm> smooth;
    if (sk == "lp_residual") {
      const double p = number(need(js, "smooth", "p"), "smooth.p");
      Matrix A = matrix_of(need(js, "smooth", "A"), "smooth.A", base);
      Vector c = vector_of(need(js, "smooth", "c"), "smooth.c");
      if (A.rows() != c.size()) throw SchemaError("smooth.c: length differs from the rows of smooth.A");
      if (A.cols() != n) throw SchemaError("smooth.A: column count differs from geometry.dimension");
      smooth = SmoothTerm::lp_residual(std::move(A), std::move(c), p);
    } else if (sk == "simplex_power") {
      allow_keys(js, "smooth", {"kind"});
      if (n != 3) throw SchemaError("smooth.kind: simplex_power needs geometry.dimension = 3");
      smooth = SmoothTerm::simplex_power();
    } else {
      throw SchemaError("smooth.kind: unknown kind '" + sk + "'");
    }

    const json& jn = need(j, "problem", "nonsmooth");
    allow_keys(jn, "nonsmooth", {"kind", "lambda", "rows"});
    const std::string nk = text(need(jn, "nonsmooth", "kind"), "nonsmooth.kind");
    std::optional<NonsmoothTerm> g;
    if (nk == "scaled_l1") {
      allow_keys(jn, "nonsmooth", {"kind", "lambda"});
      g = NonsmoothTerm::scaled_l1(number(need(jn, "nonsmooth", "lambda"), "nonsmooth.lambda"));
    } else if (nk == "max_linear") {
      allow_keys(jn, "nonsmooth", {"kind", "rows"});
      g = NonsmoothTerm::max_linear(matrix_of(need(jn, "nonsmooth", "rows"), "nonsmooth.rows", base));
    } else if (nk == "zero") {
      allow_keys(jn, "nonsmooth", {"kind"});
      g = NonsmoothTerm::zero();
    } else {
      throw SchemaError("nonsmooth.kind: unknown kind '" + nk + "'");
    }

    const SetDescriptor C = parse_set(need(j, "problem", "constraint"), "constraint");
    CompositeProblem pb(*smooth, *g, C, *geo);

    const json& jt = need(j, "problem", "schedule");
    allow_keys(jt, "schedule", {"family", "sigma", "center", "norm_exponent"});
    const std::string fam = text(need(jt, "schedule", "family"), "schedule.family");
    std::optional<TelescopicSchedule> sched;
    if (fam == "power_box") {
      allow_keys(jt, "schedule", {"family", "sigma"});
      double sigma = 0.5;
      if (jt.contains("sigma"))
        sigma = number(jt["sigma"], "schedule.sigma");
      else if (const auto* t = std::get_if<LpResidual>(&smooth->kind()))
        sigma = default_power_sigma(t->p);
      sched = TelescopicSchedule::power_box(sigma, C);
    } else if (fam == "sqrt_ball") {
      allow_keys(jt, "schedule", {"family", "center", "norm_exponent"});
      const double p = jt.contains("norm_exponent") ? number(jt["norm_exponent"], "schedule.norm_exponent") : 2.0;
      Vector c = jt.contains("center") ? vector_of(jt["center"], "schedule.center") : Vector();
      if (c.size() && c.size() != n) throw SchemaError("schedule.center: wrong dimension");
      sched = TelescopicSchedule::sqrt_ball(C, p, std::move(c));
    } else if (fam == "constant") {
      allow_keys(jt, "schedule", {"family"});
      sched = TelescopicSchedule::constant(C);
    } else {
      throw SchemaError("schedule.family: unknown family '" + fam + "'");
    }

    SolverConfig cfg;
    if (j.contains("solver")) {
      const json& jc = j["solver"];
      allow_keys(jc, "solver", {"rule", "eta", "L1", "k_max", "inner_tol", "stop_gap", "x1"});
      if (jc.contains("rule")) {
        const std::string r = text(jc["rule"], "solver.rule");
        if (r == "lipschitz")
          cfg.rule = StepRule::Lipschitz;
        else if (r == "backtracking")
          cfg.rule = StepRule::Backtracking;
        else
          throw SchemaError("solver.rule: unknown rule '" + r + "'");
      }
      if (jc.contains("eta")) cfg.eta = number(jc["eta"], "solver.eta");
      if (jc.contains("L1")) cfg.L1 = number(jc["L1"], "solver.L1");
      if (jc.contains("k_max")) cfg.k_max = integer(jc["k_max"], "solver.k_max");
      if (jc.contains("inner_tol")) cfg.inner_tol = number(jc["inner_tol"], "solver.inner_tol");
      if (jc.contains("stop_gap")) cfg.stop_gap = number(jc["stop_gap"], "solver.stop_gap");
      if (jc.contains("x1")) {
        cfg.x1 = vector_of(jc["x1"], "solver.x1");
        if (cfg.x1->size() != n) throw SchemaError("solver.x1: wrong dimension");
      }
      if (cfg.rule == StepRule::Backtracking && !(cfg.eta > 1.0)) throw SchemaError("solver.eta: must be > 1");
      if (cfg.L1 && !(*cfg.L1 > 0.0)) throw SchemaError("solver.L1: must be positive");
      if (cfg.k_max < 1) throw SchemaError("solver.k_max: must be >= 1");
      if (!(cfg.inner_tol > 0.0)) throw SchemaError("solver.inner_tol: must be positive");
    }

    json meta = json::object();
    if (j.contains("meta")) {
      allow_keys(j["meta"], "meta",
                 {"seed", "n", "m", "p", "lambda", "density", "noise_level", "noise_factor", "generator", "note"});
      meta = j["meta"];
    }
    return ProblemFile{std::move(pb), std::move(*sched), std::move(cfg), std::move(meta)};
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(e.what());
  }
}

/// Serializes the instance. With blob_path set, A is written there and
/// referenced by file name.
inline json problem_to_json(const ProblemFile& f, const std::optional<std::filesystem::path>& blob_path = {}) {
  using namespace detail;
  const auto& pb = f.problem;
  json j;
  j["geometry"] = {{"kind", pb.geometry().is_entropy() ? "negative_entropy" : "half_squared_euclidean"},
                   {"dimension", pb.dimension()},
                   {"norm_exponent", number_json(pb.geometry().norm_exponent())}};
  if (const auto* t = std::get_if<LpResidual>(&pb.smooth().kind())) {
    json A;
    if (blob_path) {
      write_blob(*blob_path, t->A);
      A = {{"blob", blob_path->filename().string()}};
    } else {
      A = matrix_json(t->A);
    }
    j["smooth"] = {{"kind", "lp_residual"}, {"p", t->p}, {"A", A}, {"c", vector_json(t->c)}};
  } else {
    j["smooth"] = {{"kind", "simplex_power"}};
  }
  const auto& g = pb.nonsmooth();
  if (const auto* l = std::get_if<ScaledL1>(&g.kind()))
    j["nonsmooth"] = {{"kind", "scaled_l1"}, {"lambda", l->lambda}};
  else if (const auto* m = std::get_if<MaxLinear>(&g.kind()))
    j["nonsmooth"] = {{"kind", "max_linear"}, {"rows", matrix_json(m->rows)}};
  else
    j["nonsmooth"] = {{"kind", "zero"}};
  j["constraint"] = set_json(pb.constraint());

  const auto& s = f.schedule;
  if (const auto* pbx = std::get_if<PowerBox>(&s.family()))
    j["schedule"] = {{"family", "power_box"}, {"sigma", pbx->sigma}};
  else if (const auto* sb = std::get_if<SqrtBall>(&s.family())) {
    j["schedule"] = {{"family", "sqrt_ball"}, {"norm_exponent", number_json(sb->norm_exponent)}};
    if (sb->center.size()) j["schedule"]["center"] = vector_json(sb->center);
  } else
    j["schedule"] = {{"family", "constant"}};

  const auto& c = f.solver;
  json js = {{"rule", to_string(c.rule)}, {"eta", c.eta}, {"k_max", c.k_max}, {"inner_tol", c.inner_tol}};
  if (c.L1) js["L1"] = *c.L1;
  if (c.stop_gap) js["stop_gap"] = *c.stop_gap;
  if (c.x1) js["x1"] = vector_json(*c.x1);
  j["solver"] = js;
  if (!f.meta.empty()) j["meta"] = f.meta;
  return j;
}

inline ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw SchemaError("cannot open problem file " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("problem file is not valid JSON: ") + e.what());
  }
  return problem_from_json(j, path.parent_path().empty() ? "." : path.parent_path());
}

/// Writes the problem; A goes to a sibling .bin blob when it has at least
/// 10^6 entries or when force_blob is set.
inline void save_problem(const std::filesystem::path& path, const ProblemFile& f, bool force_blob = false) {
  std::optional<std::filesystem::path> blob;
  if (const auto* t = std::get_if<LpResidual>(&f.problem.smooth().kind()))
    if (force_blob || t->A.size() >= 1000000) {
      auto b = path;
      b.replace_extension(".A.bin");
      blob = b;
    }
  std::ofstream os(path);
  if (!os) throw SchemaError("cannot write " + path.string());
  os << problem_to_json(f, blob).dump(2) << "\n";
}

/// Hash of the instance sections (geometry, smooth, nonsmooth, constraint,
/// schedule) with matrices inlined, independent of blob storage and solver
/// settings.
inline std::string instance_hash(const ProblemFile& f) {
  json j = problem_to_json(f);
  json inst = {{"geometry", j["geometry"]},     {"smooth", j["smooth"]},
               {"nonsmooth", j["nonsmooth"]},   {"constraint", j["constraint"]},
               {"schedule", j["schedule"]}};
  return hex64(fnv1a64(inst.dump()));
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

struct TraceFile {
  json header;
  RunTrace trace;
  bool footer_present = false;
  bool checksum_ok = false;
  std::size_t footer_rows = 0;
};

inline std::string trace_row(const IterationRecord& r) {
  std::string s = std::to_string(r.k) + "," + r.F.to_string() + "," + format_double(r.L) + "," +
                  format_double(r.mu) + "," + std::to_string(r.i_k) + "," + format_double(r.step_norm) +
                  "," + format_double(r.wall_ms);
  for (Index j = 0; j < r.x.size(); ++j) s += "," + format_double(r.x[j]);
  return s;
}

inline std::string trace_columns(Index n) {
  std::string s = "k,F,L_k,mu_k,i_k,step_norm,wall_ms";
  for (Index j = 0; j < n; ++j) s += ",x_" + std::to_string(j);
  return s;
}

/// Streams a trace: header line, column line, one row per record, then a
/// footer carrying the row count and an FNV-1a checksum of the body.
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, const json& header, Index n) : os_(path) {
    if (!os_) throw SchemaError("cannot write trace " + path.string());
    os_ << "# " << header.dump() << "\n";
    emit(trace_columns(n));
  }
  void append(const IterationRecord& r) {
    emit(trace_row(r));
    ++rows_;
  }
  void finish() {
    os_ << "# checksum fnv1a64=" << hex64(hash_) << " rows=" << rows_ << "\n";
    os_.flush();
  }

 private:
  void emit(const std::string& line) {
    os_ << line << "\n";
    os_.flush();
    hash_ = fnv1a64(line + "\n", hash_);
  }
  std::ofstream os_;
  std::uint64_t hash_ = kFnvOffset;
  std::size_t rows_ = 0;
};

inline json trace_header(const ProblemFile& f, const RunTrace& t) {
  json h;
  h["format"] = "teprog-trace/1";
  h["instance_hash"] = instance_hash(f);
  h["problem"] = t.problem;
  h["schedule"] = t.schedule;
  h["geometry"] = t.geometry;
  h["rule"] = to_string(t.rule);
  h["eta"] = t.eta;
  h["L1"] = t.L1;
  h["k_max"] = t.k_max;
  h["inner_tol"] = f.solver.inner_tol;
  h["seed"] = f.meta.contains("seed") ? f.meta["seed"] : json(nullptr);
  h["radius_norm"] = "norm radii of S_k are measured in the geometry's norm";
  return h;
}

inline void write_trace(const std::filesystem::path& path, const json& header, const RunTrace& t,
                        Index n) {
  TraceWriter w(path, header, n);
  for (const auto& r : t.records) w.append(r);
  w.finish();
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument(s);
  return v;
}

}  // namespace detail

inline TraceFile read_trace(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw SchemaError("cannot open trace " + path.string());
  TraceFile tf;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw SchemaError("trace: missing header line");
  try {
    tf.header = json::parse(line.substr(2));
  } catch (const json::exception&) {
    throw SchemaError("trace: header line is not valid JSON");
  }
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);

  std::uint64_t hash = kFnvOffset;
  std::size_t body_end = lines.size();
  if (!lines.empty() && lines.back().rfind("# checksum ", 0) == 0) {
    tf.footer_present = true;
    body_end = lines.size() - 1;
    const std::string& foot = lines.back();
    const auto hpos = foot.find("fnv1a64="), rpos = foot.find(" rows=");
    if (hpos == std::string::npos || rpos == std::string::npos) throw SchemaError("trace: malformed footer");
    const std::string want = foot.substr(hpos + 8, rpos - hpos - 8);
    tf.footer_rows = std::stoull(foot.substr(rpos + 6));
    for (std::size_t i = 0; i < body_end; ++i) hash = fnv1a64(lines[i] + "\n", hash);
    tf.checksum_ok = hex64(hash) == want && tf.footer_rows + 1 == body_end;
  }
  if (body_end == 0) throw SchemaError("trace: missing column line");
  const auto cols = detail::split(lines[0], ',');
  if (cols.size() < 7 || cols[0] != "k") throw SchemaError("trace: unexpected column line");
  const std::size_t n = cols.size() - 7;

  auto& t = tf.trace;
  const std::string rule = tf.header.value("rule", "lipschitz");
  t.rule = rule == "backtracking" ? StepRule::Backtracking : StepRule::Lipschitz;
  t.eta = tf.header.value("eta", 2.0);
  t.L1 = tf.header.value("L1", 1.0);
  t.k_max = tf.header.value("k_max", std::int64_t{0});
  t.schedule = tf.header.value("schedule", "");
  t.geometry = tf.header.value("geometry", "");
  t.problem = tf.header.value("problem", "");
  for (std::size_t i = 1; i < body_end; ++i) {
    const auto f = detail::split(lines[i], ',');
    const bool last = i + 1 == body_end;
    try {
      if (f.size() != 7 + n) throw std::invalid_argument("field count");
      IterationRecord r;
      r.k = std::stoll(f[0]);
      r.F = ExtendedReal::parse(f[1]);
      r.L = detail::parse_double(f[2]);
      r.mu = detail::parse_double(f[3]);
      r.i_k = std::stoi(f[4]);
      r.step_norm = detail::parse_double(f[5]);
      r.wall_ms = detail::parse_double(f[6]);
      r.x.resize(static_cast<Index>(n));
      for (std::size_t j = 0; j < n; ++j) r.x[static_cast<Index>(j)] = detail::parse_double(f[7 + j]);
      if (r.k != static_cast<std::int64_t>(t.records.size()) + 1)
        throw std::invalid_argument("k out of sequence");
      t.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      // A cut-off final row is what truncation looks like.
      if (last && !tf.footer_present) break;
      throw SchemaError("trace: malformed row " + std::to_string(i) + " (" + e.what() + ")");
    }
  }
  return tf;
}

// ---------------------------------------------------------------------------
// Reference solutions
// ---------------------------------------------------------------------------

struct ReferenceFile {
  std::string instance_hash;
  Vector x_ref;
  double F_ref = 0.0;
  std::int64_t iterations = 0;
};

inline void save_reference(const std::filesystem::path& path, const ReferenceFile& r) {
  json j = {{"instance_hash", r.instance_hash},
            {"x_ref", detail::vector_json(r.x_ref)},
            {"F_ref", r.F_ref},
            {"iterations", r.iterations}};
  std::ofstream os(path);
  if (!os) throw SchemaError("cannot write " + path.string());
  os << j.dump(2) << "\n";
}

inline ReferenceFile load_reference(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw SchemaError("cannot open reference file " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("reference file is not valid JSON: ") + e.what());
  }
  detail::allow_keys(j, "reference", {"instance_hash", "x_ref", "F_ref", "iterations"});
  ReferenceFile r;
  r.instance_hash = detail::text(detail::need(j, "reference", "instance_hash"), "reference.instance_hash");
  r.x_ref = detail::vector_of(detail::need(j, "reference", "x_ref"), "reference.x_ref");
  r.F_ref = detail::number(detail::need(j, "reference", "F_ref"), "reference.F_ref");
  r.iterations = j.contains("iterations") ? detail::integer(j["iterations"], "reference.iterations") : 0;
  return r;
}

}  // namespace teprog
