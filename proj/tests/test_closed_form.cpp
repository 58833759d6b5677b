#include <cmath>

#include "doctest.h"
#include "metagrad/closed_form.hpp"
#include "metagrad/meta_gradient.hpp"
#include "test_support.hpp"

using namespace metagrad;
namespace mt = metagrad::testing;

namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Fixed-point iteration of the first-order map with a plain loop, independent of fo_iteration_map.
Vec fo_fixed_point(const TaskFamily& f, double alpha, double beta, int iters) {
  Vec w(f.dim());
  for (int k = 0; k < iters; ++k) {
    Vec step(f.dim());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto& t = f.quadratic_task(i);
      Vec inner = w;
      const Vec g = t.gradient(w);
      for (std::size_t j = 0; j < w.dim(); ++j) inner[j] -= alpha * g[j];
      const Vec go = t.gradient(inner);
      for (std::size_t j = 0; j < w.dim(); ++j) step[j] += f.weight(i) * go[j];
    }
    for (std::size_t j = 0; j < w.dim(); ++j) w[j] -= beta * step[j];
  }
  return w;
}

}  // namespace

TEST_CASE("closed forms on the 1-d instance") {
  const TaskFamily f = mt::two_task_line();
  const double alpha = 0.1;
  const Vec ws = solve_quadratic_maml(f, alpha);
  const Vec wfo = solve_quadratic_fo(f, alpha);
  CHECK(ws[0] == doctest::Approx(-0.085 / 1.045).epsilon(1e-14));
  CHECK(ws[0] == doctest::Approx(-0.0813397).epsilon(1e-6));
  CHECK(wfo[0] == doctest::Approx(-0.04).epsilon(1e-14));

  const double root = bisect([&](double x) { return exact_grad_F(f, Vec{x}, alpha)[0]; }, -1.0, 1.0);
  CHECK(std::abs(root - ws[0]) <= 1e-12);
  CHECK(std::abs(fo_fixed_point(f, alpha, 0.5, 2000)[0] - wfo[0]) <= 1e-12);

  CHECK(fo_gap(f, alpha) == doctest::Approx(std::abs(exact_grad_F(f, Vec{-0.04}, alpha)[0])).epsilon(1e-14));
}

TEST_CASE("identical tasks collapse both forms") {
  const QuadraticTask t(Mat::from_row_major({2, 0.3, 0.3, 1}), Vec{1, -2}, 0);
  const TaskFamily f = TaskFamily::quadratic({t, t, t});
  const Vec want = -1.0 * solve_spd(t.a(), t.b());
  CHECK(mt::max_abs_diff(solve_quadratic_maml(f, 0.1), want) <= 1e-12);
  CHECK(mt::max_abs_diff(solve_quadratic_fo(f, 0.1), want) <= 1e-12);
  CHECK(fo_gap(f, 0.1) <= 1e-12);
}

TEST_CASE("zero linear terms give the origin") {
  std::vector<QuadraticTask> ts{QuadraticTask(Mat::identity(2), Vec{0, 0}, 0),
                                QuadraticTask(Mat::diagonal(Vec{2, 3}), Vec{0, 0}, 0)};
  const TaskFamily f = TaskFamily::quadratic(ts);
  CHECK(solve_quadratic_maml(f, 0.1) == Vec(2));
  CHECK(solve_quadratic_fo(f, 0.1) == Vec(2));
}

TEST_CASE("small alpha limit") {
  const TaskFamily f = generate_quadratic_family({5, 3, 0.5, 2.0, 1.0}, RngStream(3));
  const Vec ws = solve_quadratic_maml(f, 1e-6);
  const Vec wfo = solve_quadratic_fo(f, 1e-6);
  CHECK(norm(ws - wfo) <= 1e-4);
  Mat abar(3);
  Vec bbar(3);
  for (std::size_t i = 0; i < f.size(); ++i) {
    abar += f.weight(i) * f.quadratic_task(i).a();
    bbar += f.weight(i) * f.quadratic_task(i).b();
  }
  CHECK(norm(wfo + solve_spd(abar, bbar)) <= 1e-4);
}

TEST_CASE("gap shrinks with alpha") {
  const TaskFamily f = generate_quadratic_family({6, 3, 0.5, 3.0, 1.0}, RngStream(4));
  const double g1 = fo_gap(f, 0.1), g2 = fo_gap(f, 0.05), g3 = fo_gap(f, 0.01);
  CHECK(g1 > g2);
  CHECK(g2 > g3);
  CHECK(g3 > 0.0);
}

TEST_CASE("properties on random families") {
  for (int trial = 0; trial < 20; ++trial) {
    const TaskFamily f = generate_quadratic_family({8, 4, 0.2, 3.0, 1.0}, RngStream(50).derive(trial));
    const double alpha = 0.25;
    const QuadraticAnalysis qa = analyze_quadratic(f, alpha);
    CHECK(norm(exact_grad_F(f, qa.w_star, alpha)) <= 1e-10);
    CHECK(mt::max_abs_diff(fo_iteration_map(f, qa.w_fo, alpha, 0.3), qa.w_fo) <= 1e-12);
    CHECK(symmetric_eigenvalues(qa.meta_matrix).front() > 0.0);
    CHECK(symmetric_eigenvalues(qa.fo_matrix).front() > 0.0);
    CHECK(qa.grad_F_at_wfo_norm == doctest::Approx(norm(exact_grad_F(f, qa.w_fo, alpha))));
    // Independent Newton root of the meta-gradient.
    const Vec root = mt::newton_root([&](const Vec& w) { return exact_grad_F(f, w, alpha); }, Vec(4), 1e-13);
    CHECK(norm(root - qa.w_star) <= 1e-9);
  }
}

TEST_CASE("closed forms reject bad input") {
  const TaskFamily m = generate_mf_family(2, 2, 1.0, RngStream(1));
  CHECK_THROWS_AS(solve_quadratic_maml(m, 0.1), std::invalid_argument);
  const TaskFamily f = mt::two_task_line();
  CHECK_THROWS_AS(solve_quadratic_fo(f, 0.6), std::invalid_argument);
}
