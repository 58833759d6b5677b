#include <cmath>

#include "doctest.h"
#include "metagrad/error.hpp"
#include "metagrad/meta_gradient.hpp"
#include "metagrad/stochastic_oracle.hpp"
#include "test_support.hpp"

using namespace metagrad;

namespace {

const QuadraticTask& sample_task() {
  static const QuadraticTask t(Mat::from_row_major({2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 1.5}), Vec{1, -1, 0.5}, 0.0);
  return t;
}

double noise_energy(int D, double sigma_tilde, int trials) {
  const Vec w{0.3, -0.2, 1.0};
  const Vec exact = sample_task().gradient(w);
  double acc = 0.0;
  const RngStream rng(500);
  for (int k = 0; k < trials; ++k) acc += squared_norm(noisy_grad(sample_task(), w, D, sigma_tilde, rng.derive(k)) - exact);
  return acc / trials;
}

}  // namespace

TEST_CASE("batch spec validation") {
  CHECK_NOTHROW(validate(BatchSpec{}));
  BatchSpec bad;
  bad.D_o = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = BatchSpec{};
  bad.B = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("noise-free oracles are exact") {
  const Vec w{1, 2, 3};
  CHECK(noisy_grad(sample_task(), w, 5, 0.0, RngStream(1)) == sample_task().gradient(w));
  CHECK(noisy_hess(sample_task(), w, 5, 0.0, RngStream(1)) == sample_task().hessian(w));
}

TEST_CASE("oracles reject empty batches") {
  CHECK_THROWS_AS(noisy_grad(sample_task(), Vec(3), 0, 1.0, RngStream(1)), std::invalid_argument);
  CHECK_THROWS_AS(noisy_hess(sample_task(), Vec(3), 0, 1.0, RngStream(1)), std::invalid_argument);
}

TEST_CASE("noisy gradient is deterministic") {
  const RngStream rng = RngStream(9).derive(Purpose::kInner);
  CHECK(noisy_grad(sample_task(), Vec(3), 3, 1.0, rng) == noisy_grad(sample_task(), Vec(3), 3, 1.0, rng));
}

TEST_CASE("noise variance scales as one over D") {
  const int trials = 100000;
  const double small = noise_energy(2, 1.5, trials);
  const double large = noise_energy(32, 1.5, trials);
  CHECK(std::abs(small / large - 16.0) <= 1.6);
  CHECK(small <= 1.5 * 1.5 / 2 * 1.05);
  CHECK(small >= 1.5 * 1.5 / 2 * 0.95);
}

TEST_CASE("noisy gradient is unbiased") {
  const Vec w{0.3, -0.2, 1.0};
  const Vec exact = sample_task().gradient(w);
  VecMoments m(3);
  const RngStream rng(501);
  for (int k = 0; k < 100000; ++k) m.add(noisy_grad(sample_task(), w, 1, 2.0, rng.derive(k)));
  // Per-coordinate SE is sigma / sqrt(d n).
  const double se = 2.0 / std::sqrt(3.0 * 100000);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(m.mean()[j] - exact[j]) <= 4 * se);
}

TEST_CASE("noisy Hessian is symmetric with the declared energy") {
  const Vec w{0.1, 0.2, 0.3};
  const Mat exact = sample_task().hessian(w);
  const RngStream rng(600);
  const int D = 4;
  const double sigma_H = 3.0;
  double acc = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Mat h = noisy_hess(sample_task(), w, D, sigma_H, rng.derive(k));
    CHECK(h.is_symmetric());
    const double e = frobenius_norm(h - exact);
    acc += e * e;
  }
  acc /= 10000;
  CHECK(std::abs(acc - sigma_H * sigma_H / D) <= 0.05 * sigma_H * sigma_H / D);
}

TEST_CASE("task batch sampling") {
  const TaskFamily single = TaskFamily::quadratic({sample_task()});
  for (auto i : sample_task_batch(single, 50, RngStream(1))) CHECK(i == 0);

  const TaskFamily four = TaskFamily::quadratic({sample_task(), sample_task(), sample_task(), sample_task()});
  const auto draws = sample_task_batch(four, 100000, RngStream(2));
  std::vector<int> counts(4);
  for (auto i : draws) ++counts.at(i);
  for (int c : counts) CHECK(std::abs(c / 1e5 - 0.25) <= 0.01);

  CHECK(sample_task_batch(four, 30, RngStream(3)) == sample_task_batch(four, 30, RngStream(3)));

  const TaskFamily skew = TaskFamily::quadratic({sample_task(), sample_task()}, {0.9, 0.1});
  int zeros = 0;
  for (auto i : sample_task_batch(skew, 100000, RngStream(4))) zeros += i == 0;
  CHECK(std::abs(zeros / 1e5 - 0.9) <= 0.01);
}
