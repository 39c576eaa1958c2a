#pragma once

// Independent reference implementations used only by the tests. Nothing here
// calls into the library's linear algebra, rollout or loss code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Grid = std::vector<Vec>;  // row-major nested matrix

inline Grid naive_matmul(const Grid& a, const Grid& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.front().size();
  Grid c(n, Vec(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i][j] += a[i][p] * b[p][j];
  return c;
}

inline Grid identity(std::size_t n) {
  Grid g(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) g[i][i] = 1.0;
  return g;
}

// phi^(t-1) z by building the matrix power through repeated multiplication.
inline Vec matrix_power_apply(const Grid& phi, const Vec& z, std::size_t t) {
  Grid p = identity(phi.size());
  for (std::size_t i = 1; i < t; ++i) p = naive_matmul(p, phi);
  Vec out(z.size(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = 0; j < z.size(); ++j) out[i] += p[i][j] * z[j];
  return out;
}

// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(Grid a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0) return 0.0;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

// KL(N(mu, cov) || N(0, I)) from the trace/determinant formula.
inline double kl_std_normal(const Vec& mu, const Grid& cov) {
  double tr = 0.0, mm = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    tr += cov[i][i];
    mm += mu[i] * mu[i];
  }
  return 0.5 * (tr + mm - static_cast<double>(mu.size()) - std::log(determinant(cov)));
}

inline double softplus(double x) { return std::log1p(std::exp(x)); }

struct Point {
  double x;
  double y;
};

// One-dimensional stochastic or deterministic objective written out longhand:
// state layout [slope, intercept | s_slope, s_intercept | augment...].
inline double scalar_objective(const Grid& phi, const Vec& z1,
                               const std::vector<std::vector<Point>>& rings, bool stochastic,
                               double beta, double sigma_noise, double sigma_min) {
  Vec z = z1;
  double total = 0.0;
  for (std::size_t t = 0; t < rings.size(); ++t) {
    if (t > 0) {
      Vec next(z.size(), 0.0);
      for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = 0; j < z.size(); ++j) next[i] += phi[i][j] * z[j];
      z = next;
    }
    if (rings[t].empty()) continue;
    double data = 0.0, kl = 0.0;
    for (const Point& p : rings[t]) {
      const double mean = z[0] * p.x + z[1];
      data += (mean - p.y) * (mean - p.y);
      if (stochastic) {
        const double s0 = softplus(z[2]) + sigma_min, s1 = softplus(z[3]) + sigma_min;
        const double var = p.x * p.x * s0 * s0 + s1 * s1 + sigma_noise * sigma_noise;
        kl += 0.5 * (var + mean * mean - 1.0 - std::log(var));
      }
    }
    const double n = static_cast<double>(rings[t].size());
    total += data / n + (stochastic ? beta * kl / n : 0.0);
  }
  return total;
}

// Central differences of f at x.
inline Vec central_difference(const std::function<double(const Vec&)>& f, Vec x, double h) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, floor)
inline double relative_error(const Vec& a, const Vec& b, double floor = 1e-12) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(d) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

}  // namespace oracle
