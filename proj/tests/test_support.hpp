#pragma once

// Independent oracles for the unit and acceptance suites. Nothing here calls
// the library routine it is used to check.

#include <cmath>
#include <functional>
#include <vector>

#include "metagrad/numerics.hpp"
#include "metagrad/rng.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad::testing {

inline Vec naive_matvec(const Mat& m, const Vec& v) {
  Vec out(m.dim());
  for (std::size_t r = 0; r < m.dim(); ++r) {
    for (std::size_t c = 0; c < m.dim(); ++c) out[r] += m.row_major()[r * m.dim() + c] * v[c];
  }
  return out;
}

inline Mat random_symmetric(const RngStream& rng, std::size_t d, double scale = 1.0) {
  Mat m(d);
  const Vec g = gaussian(rng, d * d, scale);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = r; c < d; ++c) {
      m(r, c) = g[r * d + c];
      m(c, r) = g[r * d + c];
    }
  }
  return m;
}

// Central finite-difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Central finite-difference directional derivative of a vector function.
inline Vec fd_directional(const std::function<Vec(const Vec&)>& g, const Vec& x, const Vec& v, double h) {
  Vec xp = x, xm = x;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    xp[i] += h * v[i];
    xm[i] -= h * v[i];
  }
  Vec out = g(xp);
  const Vec lo = g(xm);
  for (std::size_t i = 0; i < out.dim(); ++i) out[i] = (out[i] - lo[i]) / (2.0 * h);
  return out;
}

// Gaussian elimination with partial pivoting.
inline Vec gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
    x[i] = acc / a[i][i];
  }
  return x;
}

// F(w) = sum_i p_i f_i(w - alpha grad f_i(w)), written out independently of the library's exact_F.
inline double brute_F(const TaskFamily& family, const Vec& w, double alpha) {
  double acc = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const Vec g = family.task(i).gradient(w);
    Vec adapted = w;
    for (std::size_t j = 0; j < w.dim(); ++j) adapted[j] -= alpha * g[j];
    acc += family.weight(i) * family.task(i).value(adapted);
  }
  return acc;
}

// Newton root-find of a vector field using a central-difference Jacobian.
inline Vec newton_root(const std::function<Vec(const Vec&)>& field, Vec x, double tol, int max_iters = 50) {
  const std::size_t n = x.dim();
  for (int it = 0; it < max_iters; ++it) {
    const Vec fx = field(x);
    double fn = 0.0;
    for (double v : fx) fn = std::max(fn, std::abs(v));
    if (fn <= tol) break;
    std::vector<std::vector<double>> jac(n, std::vector<double>(n));
    for (std::size_t c = 0; c < n; ++c) {
      Vec e(n);
      e[c] = 1.0;
      const Vec col = fd_directional(field, x, e, 1e-4);
      for (std::size_t r = 0; r < n; ++r) jac[r][c] = col[r];
    }
    const Vec step = gauss_solve(jac, fx.values());
    for (std::size_t i = 0; i < n; ++i) x[i] -= step[i];
  }
  return x;
}

// f(w) = w^4 / 12 in one dimension: grad w^3/3, Hessian w^2.
class QuarticTask final : public TaskOracle {
 public:
  std::size_t dim() const override { return 1; }
  double value(const Vec& w) const override { return std::pow(w[0], 4) / 12.0; }
  Vec gradient(const Vec& w) const override { return Vec{std::pow(w[0], 3) / 3.0}; }
  Mat hessian(const Vec& w) const override { return Mat::from_row_major({w[0] * w[0]}); }
};

// The 1-d two-task instance A = (1, 2), b = (1, -1).
inline TaskFamily two_task_line() {
  std::vector<QuadraticTask> tasks;
  tasks.emplace_back(Mat::from_row_major({1.0}), Vec{1.0}, 0.0);
  tasks.emplace_back(Mat::from_row_major({2.0}), Vec{-1.0}, 0.0);
  return TaskFamily::quadratic(std::move(tasks));
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace metagrad::testing
