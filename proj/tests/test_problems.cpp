#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "teprog/problems.hpp"

using namespace teprog;
using testing_support::random_matrix;
using testing_support::simplex_problem;
using testing_support::vec;

TEST(SmoothTerm, ZeroResidual) {
  Matrix A = random_matrix(4, 3, 1);
  const Vector x = vec({0.3, -1.0, 2.0});
  const Vector c = A * x;
  for (double p : {2.0, 2.5, 3.0}) {
    const auto f = SmoothTerm::lp_residual(A, c, p);
    EXPECT_EQ(f.value(x), 0.0);
    EXPECT_LE(f.gradient(x).norm(), 1e-12);
  }
}

TEST(SmoothTerm, QuadraticGradient) {
  Matrix A = random_matrix(5, 3, 2);
  const Vector c = vec({1, 2, 3, 4, 5}), x = vec({0.1, 0.2, -0.4});
  const auto f = SmoothTerm::lp_residual(A, c, 2.0);
  EXPECT_LE((f.gradient(x) - A.transpose() * (A * x - c)).norm(), 1e-12);
}

TEST(SmoothTerm, SimplexPowerAtBarycenter) {
  const auto f = SmoothTerm::simplex_power();
  const Vector w = Vector::Constant(3, 1.0 / 3.0);
  const Vector g = f.gradient(w);
  const Vector fd = oracle::fd_gradient(oracle::simplex_power, w);
  for (Index j = 0; j < 3; ++j) {
    EXPECT_NEAR(g[j], fd[j], 1e-7);
    EXPECT_NEAR(g[j], 4.0 / 3.0 * std::pow(2.0 / 3.0, 1.5), 1e-15);
  }
}

TEST(SmoothTerm, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (double p : {2.0, 2.3, 3.0, 4.5}) {
    const auto f = SmoothTerm::lp_residual(random_matrix(7, 5, 10), Vector::Ones(7), p);
    for (int s = 0; s < 200; ++s) {
      Vector x(5);
      for (auto& v : x) v = nd(rng);
      const Vector g = f.gradient(x);
      const Vector fd = oracle::fd_gradient([&](const Vector& z) { return f.value(z); }, x);
      EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, g.norm())) << "p = " << p;
    }
  }
  const auto sp = SmoothTerm::simplex_power();
  for (int s = 0; s < 200; ++s) {
    const Vector w = vec({u(rng), u(rng), u(rng)});
    EXPECT_LE((sp.gradient(w) - oracle::fd_gradient(oracle::simplex_power, w)).norm(),
              1e-5 * std::max(1.0, sp.gradient(w).norm()));
  }
}

TEST(SmoothTerm, InvalidParameters) {
  EXPECT_THROW(SmoothTerm::lp_residual(Matrix::Ones(2, 2), Vector::Ones(2), 1.5), InvalidParameter);
  EXPECT_THROW(SmoothTerm::lp_residual(Matrix::Ones(2, 2), Vector::Ones(3), 2.0), InvalidParameter);
  EXPECT_THROW(SmoothTerm::simplex_power().value(vec({-1, -1, 0.5})), DomainError);
}

TEST(NonsmoothTerm, ScaledL1ValueAndSubgradient) {
  const auto g = NonsmoothTerm::scaled_l1(0.5);
  const Vector x = vec({0, 2});
  EXPECT_DOUBLE_EQ(g.value(x), 1.0);
  const auto sd = nonsmooth_subgradient(g, x);
  EXPECT_TRUE(sd.contains(vec({0.3, 0.5}), 1e-12));
  EXPECT_FALSE(sd.contains(vec({0.6, 0.5}), 1e-12));

  const auto g1 = NonsmoothTerm::scaled_l1(1.0);
  EXPECT_DOUBLE_EQ(g1.value(vec({-1})), 1.0);
  const auto sd1 = nonsmooth_subgradient(g1, vec({-1}));
  EXPECT_TRUE(sd1.contains(vec({-1}), 1e-12));
  EXPECT_FALSE(sd1.contains(vec({-0.9}), 1e-3));
}

TEST(NonsmoothTerm, ScaledL1PositivelyHomogeneous) {
  const auto g = NonsmoothTerm::scaled_l1(0.7);
  const Vector x = vec({1, -2, 0.5});
  EXPECT_DOUBLE_EQ(g.value(3.0 * x), 3.0 * g.value(x));
}

TEST(NonsmoothTerm, NormalConeAtBoxFace) {
  const auto g = NonsmoothTerm::scaled_l1(1.0);
  const auto sd = nonsmooth_subgradient(g, vec({2.0, 0.0}), SetDescriptor::box(2.0));
  EXPECT_TRUE(sd.contains(vec({5.0, 0.0}), 1e-12));
  EXPECT_FALSE(sd.contains(vec({0.5, 0.0}), 1e-12));
}

TEST(NonsmoothTerm, MaxLinearSingleRow) {
  Matrix rows(1, 3);
  rows << 0.3, 0.3, 0.3;
  const auto g = NonsmoothTerm::max_linear(rows);
  const Vector w = Vector::Constant(3, 1.0 / 3.0);
  EXPECT_NEAR(g.value(w), 0.3, 1e-15);
}

TEST(NonsmoothTerm, MaxLinearActiveHull) {
  Matrix rows(2, 3);
  rows << 0.3, 0.3, 0.3, 0.5, 0.2, 0.28;
  const auto g = NonsmoothTerm::max_linear(rows);
  // Both rows tie on w where 0.2 w1 - 0.1 w2 - 0.02 w3 = 0.
  Vector w = vec({0.3, 0.5, 0.5});
  w[2] = (0.2 * w[0] - 0.1 * w[1]) / 0.02;
  const auto sd = nonsmooth_subgradient(g, w);
  EXPECT_TRUE(sd.contains(0.5 * (rows.row(0) + rows.row(1)).transpose(), 1e-9));
  EXPECT_FALSE(sd.contains(vec({0.6, 0.3, 0.3}), 1e-6));
}

TEST(NonsmoothTerm, MaxLinearAdmissibility) {
  Matrix too_big(1, 3);
  too_big << 0.5, 0.4, 0.3;
  EXPECT_THROW(NonsmoothTerm::max_linear(too_big), InvalidParameter);
  Matrix too_small(1, 3);
  too_small << 0.5, 0.26, 0.2;
  EXPECT_THROW(NonsmoothTerm::max_linear(too_small), InvalidParameter);
  EXPECT_THROW(NonsmoothTerm::scaled_l1(0.0), InvalidParameter);
}

TEST(NonsmoothTerm, SubgradientOutsideConstraint) {
  EXPECT_THROW(nonsmooth_subgradient(NonsmoothTerm::scaled_l1(1.0), vec({3.0}), SetDescriptor::box(1.0)),
               DomainError);
}

TEST(Objective, InfiniteOutsideConstraint) {
  Matrix rows(1, 3);
  rows << 0.3, 0.3, 0.3;
  const auto pb = simplex_problem(rows);
  EXPECT_TRUE(objective_value(pb, vec({0.5, 0.6, 0.0})).is_infinite());
  EXPECT_TRUE(objective_value(pb, vec({-0.1, 0.6, 0.5})).is_infinite());
}

TEST(Objective, SimplexExampleBounds) {
  // Any admissible rows: row sums <= 1 keep F(c) < 0.63, and min_j a_ij >= 0.27
  // keeps F >= 0.63 at the boundary point (0.5, 0.5, 0).
  std::vector<Matrix> rowsets;
  Matrix a(1, 3);
  a << 0.3, 0.3, 0.3;
  Matrix b(2, 3);
  b << 0.27, 0.27, 0.46, 0.1, 0.2, 0.7;
  Matrix c(3, 3);
  c << 0.33, 0.33, 0.34, 0.28, 0.3, 0.4, 0.0, 0.5, 0.5;
  for (const auto& rows : {a, b, c}) {
    const auto pb = simplex_problem(rows);
    EXPECT_LT(objective_value(pb, Vector::Constant(3, 1.0 / 3.0)).value(), 0.63);
    const double Fb = objective_value(pb, vec({0.5, 0.5, 0.0})).value();
    EXPECT_GE(Fb, 4.0 / 15.0 * (1.0 + std::pow(2.0, -1.5)) + 0.27 - 1e-15);
    EXPECT_GT(Fb, 0.63);
  }
}

TEST(Objective, ConvexityOnRandomSegments) {
  std::mt19937_64 rng(12);
  const auto gi = generate_instance(4, 6, 9, 3.0, 0.2, 0.5);
  const auto& pb = gi.problem;
  Matrix rows(2, 3);
  rows << 0.3, 0.3, 0.3, 0.5, 0.2, 0.28;
  const auto sp = simplex_problem(rows);
  for (int s = 0; s < 1000; ++s) {
    const Vector x = sample_point(SetDescriptor::box(3.0), 6, rng, false);
    const Vector y = sample_point(SetDescriptor::box(3.0), 6, rng, false);
    const Vector m = 0.5 * (x + y);
    auto check = [&](double fx, double fy, double fm) {
      EXPECT_LE(fm, 0.5 * fx + 0.5 * fy + 1e-12 * (1 + std::abs(fx) + std::abs(fy)));
    };
    check(pb.smooth().value(x), pb.smooth().value(y), pb.smooth().value(m));
    check(pb.nonsmooth().value(x), pb.nonsmooth().value(y), pb.nonsmooth().value(m));
    check(objective_value(pb, x).value(), objective_value(pb, y).value(), objective_value(pb, m).value());

    const Vector u = sample_point(SetDescriptor::simplex(), 3, rng, true);
    const Vector v = sample_point(SetDescriptor::simplex(), 3, rng, true);
    check(objective_value(sp, u).value(), objective_value(sp, v).value(), objective_value(sp, 0.5 * (u + v)).value());
  }
}

TEST(Generator, Deterministic) {
  const auto a = generate_instance(1, 20, 30, 3.0, 0.1, 0.2);
  const auto b = generate_instance(1, 20, 30, 3.0, 0.1, 0.2);
  EXPECT_TRUE(a.problem == b.problem);
  EXPECT_EQ(a.x_true, b.x_true);
  const auto c = generate_instance(2, 20, 30, 3.0, 0.1, 0.2);
  EXPECT_FALSE(a.problem == c.problem);
  EXPECT_EQ((a.x_true.array() != 0.0).count(), 4);
}

TEST(Generator, ZeroDensityGivesPureNoise) {
  const auto gi = generate_instance(3, 5, 8, 2.0, 0.1, 0.0);
  EXPECT_EQ(gi.x_true, Vector::Zero(5));
  const auto& t = std::get<LpResidual>(gi.problem.smooth().kind());
  EXPECT_NEAR(t.c.norm(), gi.noise_level, 1e-15);
}

TEST(Generator, NoiseLevelIsOnePercent) {
  const auto gi = generate_instance(9, 10, 15, 2.0, 0.1, 0.5);
  const auto& t = std::get<LpResidual>(gi.problem.smooth().kind());
  const Vector signal = t.A * gi.x_true;
  EXPECT_NEAR((t.c - signal).norm(), 0.01 * signal.norm(), 1e-12);
}

TEST(Generator, InvalidParameters) {
  EXPECT_THROW(generate_instance(1, 0, 3, 2.0, 0.1, 0.5), InvalidParameter);
  EXPECT_THROW(generate_instance(1, 3, 3, 1.0, 0.1, 0.5), InvalidParameter);
  EXPECT_THROW(generate_instance(1, 3, 3, 2.0, 0.0, 0.5), InvalidParameter);
}

TEST(CompositeProblem, WitnessLiesInConstraintAndZone) {
  Matrix rows(1, 3);
  rows << 0.3, 0.3, 0.3;
  const auto pb = simplex_problem(rows);
  EXPECT_TRUE(pb.constraint().contains(pb.witness()));
  EXPECT_TRUE(pb.geometry().in_zone(pb.witness()));
  EXPECT_THROW(CompositeProblem(SmoothTerm::simplex_power(), NonsmoothTerm::zero(), SetDescriptor::box(1.0),
                                BregmanGeometry::negative_entropy(3)),
               InvalidParameter);
}
