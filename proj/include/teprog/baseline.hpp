#pragma once

#include <cmath>
#include <vector>

#include "teprog/errors.hpp"
#include "teprog/linalg.hpp"

namespace teprog {

/// Classical proximal gradient (ISTA) for ||A x - c||_2^2 / 2 + lambda ||x||_1
/// with constant step 1/L:
///   x+ = soft(x - A^T (A x - c) / L, lambda / L).
/// Returns x_1 .. x_iterations.
inline std::vector<Vector> ista(const Matrix& A, const Vector& c, double lambda, double L,
                                const Vector& x1, int iterations) {
  if (!(L > 0.0)) throw InvalidParameter("ista: step constant must be positive");
  if (iterations < 0) throw InvalidParameter("ista: iterations must be >= 0");
  std::vector<Vector> xs;
  if (iterations == 0) return xs;
  xs.reserve(static_cast<std::size_t>(iterations));
  xs.push_back(x1);
  const double thr = lambda / L;
  for (int k = 1; k < iterations; ++k) {
    const Vector& x = xs.back();
    Vector u = x - A.transpose() * (A * x - c) / L;
    for (Index j = 0; j < u.size(); ++j) {
      const double a = std::abs(u[j]) - thr;
      u[j] = a > 0.0 ? std::copysign(a, u[j]) : 0.0;
    }
    xs.push_back(std::move(u));
  }
  return xs;
}

}  // namespace teprog
