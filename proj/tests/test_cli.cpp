#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "teprog/io.hpp"

namespace fs = std::filesystem;

namespace {

// One directory per test: ctest runs each test in its own process, often
// in parallel.
fs::path dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path p = fs::temp_directory_path() / "teprog_cli_tests" / info->name();
  fs::create_directories(p);
  return p;
}

std::string path(const std::string& name) { return (dir() / name).string(); }

struct Result {
  int code;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string log = path("last.log");
  const std::string cmd = std::string(TEPROG_CLI) + " " + args + " > " + log + " 2>&1";
  const int st = std::system(cmd.c_str());
  std::ifstream is(log);
  std::stringstream ss;
  ss << is.rdbuf();
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, ss.str()};
}

std::string slurp(const std::string& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

// The p = 3 power-box pipeline shared by the certification tests.
void ensure_pipeline() {
  ASSERT_EQ(cli("gen --seed 3 --n 10 --m 15 --p 3 --sigma 0.3 --kmax 1500 --out " + path("lp3.json")).code, 0);
  const auto r = cli("solve --problem " + path("lp3.json") + " --out " + path("lp3.csv") + " --ref-out " +
                     path("lp3.ref.json") + " --ref-iterations 150000");
  ASSERT_EQ(r.code, 0) << r.out;
}

}  // namespace

TEST(Cli, SolveWritesRequestedRecords) {
  ASSERT_EQ(cli("gen --seed 1 --n 20 --m 30 --p 3 --rule backtracking --out " + path("bt.json")).code, 0);
  const auto r = cli("solve --problem " + path("bt.json") +
                     " --rule backtracking --eta 2.0 --L1 0.01 --kmax 10000 --out " + path("bt.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto tf = teprog::read_trace(path("bt.csv"));
  EXPECT_EQ(tf.trace.size(), 10000u);
  EXPECT_TRUE(tf.checksum_ok);
  const auto ls = lines(slurp(path("bt.csv")));
  EXPECT_EQ(ls[0].rfind("# {", 0), 0u);
  EXPECT_EQ(ls[1].rfind("k,F,L_k,mu_k,i_k,step_norm,wall_ms", 0), 0u);
}

TEST(Cli, MissingGeometryIsInputError) {
  ASSERT_EQ(cli("gen --seed 2 --n 4 --m 5 --p 2 --out " + path("g.json")).code, 0);
  auto j = teprog::json::parse(slurp(path("g.json")));
  j.erase("geometry");
  std::ofstream(path("nogeo.json")) << j.dump();
  const auto r = cli("solve --problem " + path("nogeo.json") + " --out " + path("x.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("geometry"), std::string::npos);
}

TEST(Cli, LipschitzWithoutBoundIsInputError) {
  ASSERT_EQ(cli("gen --seed 2 --n 4 --m 5 --p 3 --schedule constant --out " + path("nb.json")).code, 0);
  const auto r = cli("solve --problem " + path("nb.json") + " --rule lipschitz --out " + path("nb.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("NoBoundAvailable"), std::string::npos);
}

TEST(Cli, SolverFailureExitsThree) {
  ASSERT_EQ(cli("gen --seed 2 --n 4 --m 5 --p 2 --schedule constant --out " + path("sf.json")).code, 0);
  const auto r = cli("solve --problem " + path("sf.json") +
                     " --rule backtracking --eta 1.01 --L1 1e-30 --kmax 10 --out " + path("sf.csv"));
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST(Cli, BadFlagsAreInputErrors) {
  EXPECT_EQ(cli("solve --problem " + path("does_not_exist.json") + " --out " + path("y.csv")).code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("gen --seed 1 --p 1.5 --out " + path("bad.json")).code, 2);
}

TEST(Cli, CertifyEndToEnd) {
  ASSERT_NO_FATAL_FAILURE(ensure_pipeline());
  const auto r = cli("certify --trace " + path("lp3.csv") + " --problem " + path("lp3.json") + " --ref " +
                     path("lp3.ref.json") + " --report " + path("lp3.report"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(slurp(path("lp3.report")).find("PASS theorem bound"), std::string::npos);
}

TEST(Cli, CorruptedRowFailsAndNamesK) {
  ASSERT_NO_FATAL_FAILURE(ensure_pipeline());
  auto ls = lines(slurp(path("lp3.csv")));
  // Row for k = 50 sits after the header and column lines.
  auto fields = teprog::detail::split(ls[51], ',');
  ASSERT_EQ(fields[0], "50");
  fields[7] = "7.5";
  std::string row;
  for (std::size_t i = 0; i < fields.size(); ++i) row += (i ? "," : "") + fields[i];
  ls[51] = row;
  std::ofstream os(path("corrupt.csv"));
  for (const auto& l : ls) os << l << "\n";
  os.close();
  const auto r = cli("certify --trace " + path("corrupt.csv") + " --problem " + path("lp3.json") + " --ref " +
                     path("lp3.ref.json"));
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("FAIL recorded F matches F(x_k) at k = 50"), std::string::npos) << r.out;
}

TEST(Cli, MismatchedProblemIsConsistencyError) {
  ASSERT_NO_FATAL_FAILURE(ensure_pipeline());
  ASSERT_EQ(cli("gen --seed 4 --n 10 --m 15 --p 3 --sigma 0.3 --out " + path("other.json")).code, 0);
  const auto r = cli("certify --trace " + path("lp3.csv") + " --problem " + path("other.json") + " --ref " +
                     path("lp3.ref.json"));
  EXPECT_EQ(r.code, 4);
}

TEST(Cli, TruncatedTraceIsConsistencyError) {
  ASSERT_NO_FATAL_FAILURE(ensure_pipeline());
  const std::string body = slurp(path("lp3.csv"));
  std::ofstream(path("trunc.csv")) << body.substr(0, body.size() / 2);
  const auto r = cli("certify --trace " + path("trunc.csv") + " --problem " + path("lp3.json") + " --ref " +
                     path("lp3.ref.json"));
  EXPECT_EQ(r.code, 4);
}

TEST(Cli, TamperedTimingIsConsistencyError) {
  ASSERT_NO_FATAL_FAILURE(ensure_pipeline());
  auto ls = lines(slurp(path("lp3.csv")));
  auto fields = teprog::detail::split(ls[20], ',');
  fields[6] = "12345";
  std::string row;
  for (std::size_t i = 0; i < fields.size(); ++i) row += (i ? "," : "") + fields[i];
  ls[20] = row;
  std::ofstream os(path("tamper.csv"));
  for (const auto& l : ls) os << l << "\n";
  os.close();
  const auto r = cli("certify --trace " + path("tamper.csv") + " --problem " + path("lp3.json") + " --ref " +
                     path("lp3.ref.json"));
  EXPECT_EQ(r.code, 4);
}

TEST(Cli, DeterministicBodyApartFromTimings) {
  ASSERT_EQ(cli("gen --seed 5 --n 8 --m 12 --p 3 --kmax 300 --out " + path("det.json")).code, 0);
  ASSERT_EQ(cli("solve --problem " + path("det.json") + " --out " + path("det1.csv")).code, 0);
  ASSERT_EQ(cli("solve --problem " + path("det.json") + " --out " + path("det2.csv")).code, 0);
  const auto a = lines(slurp(path("det1.csv"))), b = lines(slurp(path("det2.csv")));
  ASSERT_EQ(a.size(), b.size());
  auto ha = teprog::json::parse(a[0].substr(2)), hb = teprog::json::parse(b[0].substr(2));
  ha.erase("created");
  hb.erase("created");
  EXPECT_EQ(ha, hb);
  for (std::size_t i = 1; i + 1 < a.size(); ++i) {
    auto fa = teprog::detail::split(a[i], ','), fb = teprog::detail::split(b[i], ',');
    if (i > 1) fa[6] = fb[6] = "";
    EXPECT_EQ(fa, fb) << "line " << i;
  }
}

TEST(Cli, CompareQuadraticMatchesBaseline) {
  ASSERT_EQ(cli("gen --seed 6 --n 15 --m 25 --p 2 --schedule constant --kmax 500 --out " + path("q.json")).code, 0);
  const auto r = cli("compare --problem " + path("q.json") + " --out " + path("q.cmp.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto pos = r.out.find("max iterate deviation ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LE(std::stod(r.out.substr(pos + 22)), 1e-10);
  EXPECT_EQ(lines(slurp(path("q.cmp.csv"))).size(), 501u);
  EXPECT_EQ(cli("compare --problem " + path("q.json") + " --kmax 0").code, 0);
}

TEST(Cli, CompareRejectsNonQuadratic) {
  ASSERT_EQ(cli("gen --seed 6 --n 5 --m 5 --p 3 --schedule constant --out " + path("c3.json")).code, 0);
  EXPECT_EQ(cli("compare --problem " + path("c3.json")).code, 2);
}

TEST(Cli, BlobInstanceSolves) {
  ASSERT_EQ(cli("gen --seed 7 --n 6 --m 8 --p 2 --blob --kmax 20 --out " + path("blob.json")).code, 0);
  EXPECT_TRUE(fs::exists(path("blob.A.bin")));
  EXPECT_EQ(cli("solve --problem " + path("blob.json") + " --out " + path("blob.csv")).code, 0);
}
