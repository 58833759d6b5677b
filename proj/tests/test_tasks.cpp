#include <cmath>

#include "doctest.h"
#include "metagrad/error.hpp"
#include "metagrad/family_io.hpp"
#include "metagrad/tasks.hpp"
#include "test_support.hpp"

using namespace metagrad;
namespace mt = metagrad::testing;

namespace {

QuadraticTask random_quadratic(const RngStream& rng, std::size_t d) {
  const Mat g = mt::random_symmetric(rng.derive(1), d);
  Mat a = matmul(g, g) + Mat::identity(d);
  return QuadraticTask(a, gaussian(rng.derive(2), d, 1.0), 0.3);
}

}  // namespace

TEST_CASE("quadratic gradient examples") {
  const QuadraticTask t(Mat::identity(2), Vec{0, 0}, 0.0);
  CHECK(t.gradient(Vec{1, 2}) == Vec{1, 2});

  const QuadraticTask r = random_quadratic(RngStream(3), 3);
  const Vec stationary = -1.0 * mt::gauss_solve({{r.a()(0, 0), r.a()(0, 1), r.a()(0, 2)},
                                                 {r.a()(1, 0), r.a()(1, 1), r.a()(1, 2)},
                                                 {r.a()(2, 0), r.a()(2, 1), r.a()(2, 2)}},
                                                r.b().values());
  CHECK(norm(r.gradient(stationary)) <= 1e-12);
}

TEST_CASE("quadratic gradient vs finite differences") {
  for (int trial = 0; trial < 10; ++trial) {
    const RngStream rng = RngStream(8).derive(trial);
    const QuadraticTask t = random_quadratic(rng, 4);
    const Vec w = gaussian(rng.derive(3), 4, 1.0);
    const Vec fd = mt::fd_gradient([&](const Vec& x) { return t.value(x); }, w, 1e-5);
    CHECK(mt::max_abs_diff(fd, t.gradient(w)) <= 1e-7);
  }
}

TEST_CASE("quadratic validation") {
  CHECK_THROWS_AS(QuadraticTask(Mat::from_row_major({1, 1, 0, 1}), Vec{0, 0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(QuadraticTask(Mat::diagonal(Vec{1, -1}), Vec{0, 0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(QuadraticTask(Mat::identity(2), Vec{0, 0, 0}, 0), DimensionMismatch);
  const QuadraticTask t(Mat::identity(2), Vec{0, 0}, 0);
  CHECK_THROWS_AS(t.gradient(Vec{1}), DimensionMismatch);
}

TEST_CASE("MF trivial points") {
  const MatrixFactorizationTask t(Vec{1.0, -2.0, 0.5});
  CHECK(t.gradient(Vec(3)) == Vec(3));
  CHECK(t.value(t.generator()) == doctest::Approx(0.0));
  CHECK(norm(t.gradient(t.generator())) <= 1e-14);
  CHECK(t.target() == Mat::outer(t.generator(), t.generator()));
}

TEST_CASE("MF derivatives vs finite differences") {
  for (int trial = 0; trial < 20; ++trial) {
    const RngStream rng = RngStream(77).derive(trial);
    const MatrixFactorizationTask t(gaussian(rng.derive(1), 4, 1.0));
    const Vec x = gaussian(rng.derive(2), 4, 1.0);
    const Vec v = gaussian(rng.derive(3), 4, 1.0);
    const Vec fd_g = mt::fd_gradient([&](const Vec& y) { return t.value(y); }, x, 1e-5);
    CHECK(mt::max_abs_diff(fd_g, t.gradient(x)) <= 1e-6);
    const Vec fd_hv = mt::fd_directional([&](const Vec& y) { return t.gradient(y); }, x, v, 1e-5);
    CHECK(mt::max_abs_diff(fd_hv, matvec(t.hessian(x), v)) <= 1e-5);
    CHECK(mt::max_abs_diff(t.hessian_vector(x, v), matvec(t.hessian(x), v)) <= 1e-12);
    CHECK(t.value(x) >= 0.0);
  }
}

TEST_CASE("family weights") {
  std::vector<QuadraticTask> ts{QuadraticTask(Mat::identity(1), Vec{1}, 0), QuadraticTask(Mat::identity(1), Vec{2}, 0)};
  const TaskFamily f = TaskFamily::quadratic(ts);
  CHECK(f.weight(0) == 0.5);
  CHECK_THROWS_AS(TaskFamily::quadratic(ts, {0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(TaskFamily::quadratic(ts, {0.5}), std::invalid_argument);
  std::vector<QuadraticTask> mixed{QuadraticTask(Mat::identity(1), Vec{1}, 0),
                                   QuadraticTask(Mat::identity(2), Vec{1, 1}, 0)};
  CHECK_THROWS_AS(TaskFamily::quadratic(mixed), DimensionMismatch);
}

TEST_CASE("local smoothness on quadratics") {
  const TaskFamily f = generate_quadratic_family({5, 3, 0.5, 2.0, 1.0}, RngStream(4));
  const SmoothnessProfile p = local_smoothness(f, 1.0, Vec(3));
  double want = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto eig = symmetric_eigenvalues(f.quadratic_task(i).a());
    want = std::max(want, eig.back());
  }
  CHECK(p.L == doctest::Approx(want).epsilon(1e-9));
  CHECK(p.rho == 0.0);
  CHECK(p.sigma > 0.0);
  CHECK_THROWS_AS(local_smoothness(f, 0.0, Vec(3)), std::invalid_argument);
}

TEST_CASE("identical tasks have no heterogeneity") {
  const QuadraticTask t(Mat::diagonal(Vec{1, 2}), Vec{1, -1}, 0);
  const TaskFamily same = TaskFamily::quadratic({t, t, t});
  CHECK(local_smoothness(same, 2.0, Vec(2)).sigma == 0.0);
  const TaskFamily single = TaskFamily::rank1mf({MatrixFactorizationTask(Vec{1, 1})});
  CHECK(local_smoothness(single, 2.0, Vec(2)).sigma == 0.0);
}

TEST_CASE("MF rho estimate dominates fresh Hessian-difference ratios") {
  const TaskFamily f = generate_mf_family(5, 3, 1.0, RngStream(21));
  const double radius = 2.0;
  const SmoothnessProfile p = local_smoothness(f, radius, Vec(3));
  const RngStream rng(22);
  for (int k = 0; k < 100; ++k) {
    const Vec w = sample_in_ball(rng.derive(k).derive(1), Vec(3), radius);
    const Vec u = sample_in_ball(rng.derive(k).derive(2), Vec(3), radius);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Mat diff = f.task(i).hessian(w) - f.task(i).hessian(u);
      const double ratio = spectral_norm(diff) / norm(w - u);
      CHECK(ratio <= p.rho);
      const double gratio = norm(f.task(i).gradient(w) - f.task(i).gradient(u)) / norm(w - u);
      CHECK(gratio <= p.L);
    }
  }
}

TEST_CASE("sample_in_ball stays inside") {
  const Vec c{1, 2, 3};
  for (int k = 0; k < 200; ++k) CHECK(norm(sample_in_ball(RngStream(5).derive(k), c, 0.5) - c) <= 0.5);
}

TEST_CASE("family JSON round-trip is bit exact") {
  const TaskFamily q = generate_quadratic_family({4, 3, 0.3, 1.7, 1.0}, RngStream(31));
  const TaskFamily q2 = family_from_json(nlohmann::json::parse(family_to_json(q).dump()));
  REQUIRE(q2.size() == q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(q2.quadratic_task(i).a() == q.quadratic_task(i).a());
    CHECK(q2.quadratic_task(i).b() == q.quadratic_task(i).b());
    CHECK(q2.quadratic_task(i).c() == q.quadratic_task(i).c());
  }
  CHECK(q2.weights() == q.weights());

  const TaskFamily m = generate_mf_family(6, 4, 0.7, RngStream(32));
  const TaskFamily m2 = family_from_json(nlohmann::json::parse(family_to_json(m).dump()));
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m2.mf_task(i).generator() == m.mf_task(i).generator());
  CHECK(family_to_json(m2).dump() == family_to_json(m).dump());
}

TEST_CASE("family JSON rejects malformed documents") {
  CHECK_THROWS_AS(family_from_json(nlohmann::json::parse(R"({"kind":"nope","dim":1,"tasks":[]})")), ConfigError);
  CHECK_THROWS_AS(family_from_json(nlohmann::json::parse(R"({"kind":"rank1mf","dim":2,"tasks":[{"g":[1,2],"M":[1,0,0,1]}]})")),
                  ConfigError);
}
