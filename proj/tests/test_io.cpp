#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "teprog/io.hpp"

using namespace teprog;
using testing_support::single_row;
using testing_support::vec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "teprog_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

ProblemFile lp_file(std::uint64_t seed = 1) {
  auto gi = generate_instance(seed, 6, 9, 3.0, 0.1, 0.5);
  SolverConfig cfg;
  cfg.k_max = 50;
  cfg.rule = StepRule::Backtracking;
  cfg.L1 = 0.5;
  return ProblemFile{gi.problem, TelescopicSchedule::power_box(0.3, SetDescriptor::whole_space()), cfg,
                     json{{"seed", seed}}};
}

ProblemFile simplex_file() {
  const CompositeProblem pb(SmoothTerm::simplex_power(), NonsmoothTerm::max_linear(single_row(0.3, 0.3, 0.3)),
                            SetDescriptor::simplex(), BregmanGeometry::negative_entropy(3));
  SolverConfig cfg;
  cfg.x1 = vec({0.5, 0.25, 0.25});
  return ProblemFile{pb, TelescopicSchedule::constant(SetDescriptor::simplex()), cfg, json::object()};
}

ProblemFile prism_file() {
  const CompositeProblem pb(SmoothTerm::simplex_power(), NonsmoothTerm::max_linear(single_row(0.3, 0.3, 0.3)),
                            SetDescriptor::prism(), BregmanGeometry::negative_entropy(3));
  return ProblemFile{pb, TelescopicSchedule::sqrt_ball(SetDescriptor::prism(), 1.0), SolverConfig{}, json::object()};
}

void expect_same(const ProblemFile& a, const ProblemFile& b) {
  EXPECT_TRUE(a.problem == b.problem);
  EXPECT_TRUE(a.schedule == b.schedule);
  EXPECT_TRUE(a.solver == b.solver);
  EXPECT_EQ(a.meta, b.meta);
}

}  // namespace

TEST(ProblemFile, RoundTrip) {
  for (const auto& f : {lp_file(), simplex_file(), prism_file()}) {
    const auto again = problem_from_json(problem_to_json(f));
    expect_same(f, again);
    EXPECT_EQ(problem_to_json(again).dump(), problem_to_json(f).dump());
  }
}

TEST(ProblemFile, RoundTripThroughDiskAndBlob) {
  const auto f = lp_file(2);
  const fs::path plain = scratch("plain.json"), blob = scratch("blob.json");
  save_problem(plain, f);
  save_problem(blob, f, true);
  EXPECT_TRUE(fs::exists(scratch("blob.A.bin")));
  EXPECT_EQ(fs::file_size(scratch("blob.A.bin")), 8u + 6u * 9u * 8u);
  const auto a = load_problem(plain), b = load_problem(blob);
  expect_same(f, a);
  expect_same(f, b);
  EXPECT_EQ(instance_hash(a), instance_hash(b));
}

TEST(ProblemFile, BlobLayout) {
  Matrix M(2, 3);
  M << 1, 2, 3, 4, 5, 6.5;
  const fs::path p = scratch("m.bin");
  write_blob(p, M);
  std::ifstream is(p, std::ios::binary);
  std::uint32_t dims[2];
  is.read(reinterpret_cast<char*>(dims), 8);
  EXPECT_EQ(dims[0], 2u);
  EXPECT_EQ(dims[1], 3u);
  double first[2];
  is.read(reinterpret_cast<char*>(first), 16);
  EXPECT_EQ(first[0], 1.0);
  EXPECT_EQ(first[1], 2.0);  // row-major
  EXPECT_EQ(read_blob(p), M);
}

TEST(ProblemFile, RejectsUnknownKeysAndNamesFields) {
  json j = problem_to_json(lp_file());
  j["smooth"]["extra"] = 1;
  try {
    problem_from_json(j);
    FAIL() << "unknown key accepted";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("extra"), std::string::npos);
  }
  json k = problem_to_json(lp_file());
  k.erase("geometry");
  try {
    problem_from_json(k);
    FAIL() << "missing geometry accepted";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("geometry"), std::string::npos);
  }
  json top = problem_to_json(lp_file());
  top["surprise"] = true;
  EXPECT_THROW(problem_from_json(top), SchemaError);
  json sched = problem_to_json(lp_file());
  sched["schedule"] = {{"family", "sqrt_ball"}, {"sigma", 0.3}};
  EXPECT_THROW(problem_from_json(sched), SchemaError);
  json bad_row = problem_to_json(simplex_file());
  bad_row["nonsmooth"]["rows"] = json::array({json::array({0.5, 0.4, 0.3})});
  EXPECT_THROW(problem_from_json(bad_row), SchemaError);
}

TEST(ProblemFile, HashIgnoresSolverAndTracksInstance) {
  auto a = lp_file(3), b = lp_file(3), c = lp_file(4);
  b.solver.k_max = 999;
  EXPECT_EQ(instance_hash(a), instance_hash(b));
  EXPECT_NE(instance_hash(a), instance_hash(c));
  EXPECT_EQ(instance_hash(a).size(), 16u);
}

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}

TEST(Trace, WriteReadRoundTrip) {
  const auto f = lp_file(5);
  SolverConfig cfg = f.solver;
  cfg.k_max = 40;
  const auto t = run_solver(f.problem, f.schedule, cfg);
  const fs::path p = scratch("t.csv");
  write_trace(p, trace_header(f, t), t, f.problem.dimension());
  const auto tf = read_trace(p);
  EXPECT_TRUE(tf.footer_present);
  EXPECT_TRUE(tf.checksum_ok);
  EXPECT_EQ(tf.footer_rows, 40u);
  EXPECT_EQ(tf.header["instance_hash"], instance_hash(f));
  ASSERT_EQ(tf.trace.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(tf.trace.records[i].x, t.records[i].x);
    EXPECT_EQ(tf.trace.records[i].L, t.records[i].L);
    EXPECT_EQ(tf.trace.records[i].F, t.records[i].F);
    EXPECT_EQ(tf.trace.records[i].i_k, t.records[i].i_k);
  }
  EXPECT_EQ(tf.trace.rule, StepRule::Backtracking);
  EXPECT_EQ(tf.trace.L1, t.L1);
}

TEST(Trace, TruncationAndTamperingDetected) {
  const auto f = lp_file(6);
  const auto t = run_solver(f.problem, f.schedule, f.solver);
  const fs::path p = scratch("t2.csv");
  write_trace(p, trace_header(f, t), t, f.problem.dimension());
  std::string body;
  {
    std::ifstream is(p);
    body.assign(std::istreambuf_iterator<char>(is), {});
  }
  // Cut in the middle of the last row: no footer, partial row dropped.
  const auto footer = body.rfind("# checksum");
  const std::string cut = body.substr(0, footer - 20);
  std::ofstream(scratch("cut.csv")) << cut;
  const auto tc = read_trace(scratch("cut.csv"));
  EXPECT_FALSE(tc.footer_present);
  EXPECT_EQ(tc.trace.size(), t.size() - 1);

  // Edit one digit in a row: footer present, checksum wrong.
  std::string edited = body;
  const auto row = edited.find("\n10,");
  edited[row + 4] = edited[row + 4] == '1' ? '2' : '1';
  std::ofstream(scratch("edit.csv")) << edited;
  const auto te = read_trace(scratch("edit.csv"));
  EXPECT_TRUE(te.footer_present);
  EXPECT_FALSE(te.checksum_ok);
}

TEST(Trace, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, -2.5e17})
    EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Reference, RoundTrip) {
  ReferenceFile r{"00ff00ff00ff00ff", vec({1.5, -2.25, 1e-17}), 0.4718284115346542, 1000000};
  save_reference(scratch("ref.json"), r);
  const auto s = load_reference(scratch("ref.json"));
  EXPECT_EQ(s.instance_hash, r.instance_hash);
  EXPECT_EQ(s.x_ref, r.x_ref);
  EXPECT_EQ(s.F_ref, r.F_ref);
  EXPECT_EQ(s.iterations, r.iterations);
}
