#pragma once

// Reference computations used as test oracles. Nothing here calls into the
// library's prox, solver or analysis code.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// argmin of h over an evenly spaced grid of `points` points on [lo, hi].
inline double grid_argmin(const std::function<double(double)>& h, double lo, double hi, long points) {
  double best_t = lo, best = std::numeric_limits<double>::infinity();
  for (long i = 0; i < points; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double v = h(t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  return best_t;
}

/// Central differences with step h_j = rel (1 + ||x||).
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double rel = 1e-6) {
  const double h = rel * (1.0 + x.norm());
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec a = x, b = x;
    a[j] += h;
    b[j] -= h;
    g[j] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

/// Textbook ISTA for ||Ax - c||^2/2 + lambda ||x||_1 with step 1/L.
inline std::vector<Vec> textbook_ista(const Mat& A, const Vec& c, double lambda, double L, Vec x,
                                      int iterations) {
  std::vector<Vec> out{x};
  for (int k = 1; k < iterations; ++k) {
    const Vec grad = A.transpose() * (A * x - c);
    Vec v = x - grad / L;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double t = lambda / L;
      v[j] = v[j] > t ? v[j] - t : (v[j] < -t ? v[j] + t : 0.0);
    }
    x = v;
    out.push_back(x);
  }
  return out;
}

/// sum x ln(x/y) - x + y in long double.
inline long double kl(const Vec& x, const Vec& y) {
  long double s = 0.0L;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const long double a = x[j], b = y[j];
    s += (a > 0 ? a * std::log(a / b) : 0.0L) - a + b;
  }
  return s;
}

struct GridMin {
  Vec w;
  double value = std::numeric_limits<double>::infinity();
};

/// Minimum of F over the barycentric grid {(i, j, N - i - j)/N} of the 2-simplex.
inline GridMin simplex_grid_min(const std::function<double(const Vec&)>& F, int N, bool interior_only = false) {
  GridMin best;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; i + j <= N; ++j) {
      const int k = N - i - j;
      if (interior_only && (i == 0 || j == 0 || k == 0)) continue;
      Vec w(3);
      w << i, j, k;
      w /= N;
      const double v = F(w);
      if (v < best.value) {
        best.value = v;
        best.w = w;
      }
    }
  return best;
}

/// (4/15) sum of pair sums to the power 5/2, written out directly.
inline double simplex_power(const Vec& w) {
  return 4.0 / 15.0 *
         (std::pow(w[0] + w[1], 2.5) + std::pow(w[1] + w[2], 2.5) + std::pow(w[2] + w[0], 2.5));
}

}  // namespace oracle
