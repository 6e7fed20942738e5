#pragma once

#include <initializer_list>
#include <random>

#include "teprog.hpp"

namespace testing_support {

inline teprog::Vector vec(std::initializer_list<double> v) {
  teprog::Vector x(static_cast<teprog::Index>(v.size()));
  teprog::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

inline teprog::Matrix random_matrix(teprog::Index m, teprog::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  teprog::Matrix A(m, n);
  for (teprog::Index i = 0; i < m; ++i)
    for (teprog::Index j = 0; j < n; ++j) A(i, j) = nd(rng);
  return A;
}

inline teprog::Matrix single_row(double a, double b, double c) {
  teprog::Matrix rows(1, 3);
  rows << a, b, c;
  return rows;
}

/// Simplex problem with negative entropy and the l1 norm.
inline teprog::CompositeProblem simplex_problem(const teprog::Matrix& rows) {
  using namespace teprog;
  return CompositeProblem(SmoothTerm::simplex_power(), NonsmoothTerm::max_linear(rows),
                          SetDescriptor::simplex(), BregmanGeometry::negative_entropy(3));
}

/// Prism with the entropy geometry and a sqrt(k) l1-ball schedule.
inline teprog::CompositeProblem prism_problem(const teprog::Matrix& rows) {
  using namespace teprog;
  return CompositeProblem(SmoothTerm::simplex_power(), NonsmoothTerm::max_linear(rows),
                          SetDescriptor::prism(), BregmanGeometry::negative_entropy(3));
}

}  // namespace testing_support
