#include <cmath>

#include "doctest.h"
#include "metagrad/error.hpp"
#include "metagrad/meta_gradient.hpp"
#include "metagrad/stepsize.hpp"
#include "test_support.hpp"

using namespace metagrad;

namespace {

SmoothnessProfile profile(double L, double rho, double sigma, double sigma_tilde, double sigma_H = 0.0) {
  SmoothnessProfile p;
  p.L = L;
  p.rho = rho;
  p.sigma = sigma;
  p.sigma_tilde = sigma_tilde;
  p.sigma_H = sigma_H;
  p.radius = 1.0;
  return p;
}

}  // namespace

TEST_CASE("L(w) trivial cases") {
  const TaskFamily q = generate_quadratic_family({4, 2, 0.5, 1.5, 1.0}, RngStream(1));
  const SmoothnessProfile pq = local_smoothness(q, 1.0, Vec(2));
  CHECK(smoothness_L_of_w(q, Vec{3, -1}, 0.1, pq) == 4 * pq.L);
  const TaskFamily m = generate_mf_family(4, 2, 1.0, RngStream(2));
  const SmoothnessProfile pm = local_smoothness(m, 1.0, Vec(2));
  CHECK(smoothness_L_of_w(m, Vec{0.3, 0.2}, 0.0, pm) == 4 * pm.L);
}

TEST_CASE("L(w) matches a direct re-summation") {
  const TaskFamily m = generate_mf_family(7, 3, 1.0, RngStream(3));
  const SmoothnessProfile p = profile(2.0, 5.0, 0.0, 0.0);
  const Vec w{0.2, -0.4, 0.9};
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vec g = m.task(i).gradient(w);
    double sq = 0.0;
    for (double x : g) sq += x * x;
    s += std::sqrt(sq) / 7.0;
  }
  CHECK(std::abs(smoothness_L_of_w(m, w, 0.05, p) - (8.0 + 2 * 5.0 * 0.05 * s)) <= 1e-12);
}

TEST_CASE("beta tilde deterministic cases") {
  const TaskFamily m = generate_mf_family(3, 2, 1.0, RngStream(4));
  CHECK(beta_tilde(m, Vec{1, 1}, 0.1, profile(2.0, 0.0, 1.0, 1.0), 1, 1, RngStream(1)).beta_tilde == 1.0 / 8.0);
  const TaskFamily single = TaskFamily::rank1mf({MatrixFactorizationTask(Vec{1.0, 0.5})});
  const Vec w{0.3, -0.7};
  const double gnorm = norm(single.task(0).gradient(w));
  const StepsizeSample s = beta_tilde(single, w, 0.1, profile(2.0, 3.0, 0.0, 0.0), 1, 1, RngStream(5));
  CHECK(s.beta_tilde == doctest::Approx(1.0 / (8.0 + 2 * 3.0 * 0.1 * gnorm)).epsilon(1e-15));
  CHECK(s.L_tilde * s.beta_tilde == doctest::Approx(1.0));
}

TEST_CASE("beta tilde never exceeds one over 4L") {
  const TaskFamily m = generate_mf_family(5, 3, 1.0, RngStream(6));
  const SmoothnessProfile p = profile(3.0, 4.0, 0.5, 2.0);
  for (int k = 0; k < 200; ++k) {
    const StepsizeSample s = beta_tilde(m, Vec{0.1, 0.2, 0.3}, 0.1, p, 2, 4, RngStream(7).derive(k));
    CHECK(s.beta_tilde > 0.0);
    CHECK(s.beta_tilde <= 1.0 / 12.0);
    CHECK(s.L_tilde >= 12.0);
  }
}

TEST_CASE("beta tilde decreases when gradients grow") {
  // Scaling the generators inflates every gradient norm at w = generator-free point 0.5*ones.
  const Vec g{0.6, -0.4};
  const TaskFamily small = TaskFamily::rank1mf({MatrixFactorizationTask(g)});
  const TaskFamily big = TaskFamily::rank1mf({MatrixFactorizationTask(3.0 * g)});
  const Vec w{0.5, 0.5};
  REQUIRE(norm(big.task(0).gradient(w)) > norm(small.task(0).gradient(w)));
  const SmoothnessProfile p = profile(2.0, 3.0, 0.0, 0.0);
  CHECK(beta_tilde(big, w, 0.1, p, 1, 1, RngStream(1)).beta_tilde <= beta_tilde(small, w, 0.1, p, 1, 1, RngStream(1)).beta_tilde);
}

TEST_CASE("batch conditions") {
  CHECK(batch_conditions_ok(profile(1.0, 0.0, 5.0, 5.0), 0.1, 1, 1));
  // rho alpha sigma / L = 2
  const SmoothnessProfile a = profile(1.0, 20.0, 1.0, 0.0);
  CHECK(min_stepsize_task_batch(a, 0.1) == 2);
  CHECK_FALSE(batch_conditions_ok(a, 0.1, 1, 1));
  CHECK(batch_conditions_ok(a, 0.1, 2, 1));
  // rho alpha sigma_tilde / L = 1
  const SmoothnessProfile b = profile(1.0, 10.0, 0.0, 1.0);
  CHECK(min_stepsize_data_batch(b, 0.1) == 4);
  CHECK_FALSE(batch_conditions_ok(b, 0.1, 1, 3));
  CHECK(batch_conditions_ok(b, 0.1, 1, 4));
  CHECK_THROWS_AS(beta_tilde(generate_mf_family(2, 2, 1.0, RngStream(1)), Vec{0, 0}, 0.1, b, 1, 3, RngStream(1)),
                  InvalidBatchConfig);
}

TEST_CASE("tolerant ceil") {
  CHECK(tolerant_ceil(2.0) == 2);
  CHECK(tolerant_ceil(2.0000000000001) == 2);
  CHECK(tolerant_ceil(2.01) == 3);
  CHECK(tolerant_ceil(0.0) == 0);
}

TEST_CASE("recommended batches") {
  const BatchSpec zero = recommended_batches(profile(1.0, 0.0, 0.0, 0.0), 0.1, 0.1, Algorithm::kMAML);
  CHECK(zero.B == 20);
  CHECK(zero.D_in == 1);
  CHECK(zero.D_o == 1);
  CHECK(zero.D_h == 1);
  CHECK(zero.B_prime == 1);
  CHECK(zero.D_beta == 1);

  CHECK(recommended_batches(profile(1.0, 0.0, 1.0, 0.0), 0.1, 0.5, Algorithm::kMAML).B == 244);
  // alpha rho sigma_tilde = 1
  CHECK(recommended_batches(profile(1.0, 10.0, 0.0, 1.0), 0.1, 0.5, Algorithm::kHFMAML).D_h == 36);
  // 2 alpha^2 sigma_H^2 = 2 * 0.01 * 100 = 2
  CHECK(recommended_batches(profile(1.0, 0.0, 0.0, 0.0, 10.0), 0.1, 0.5, Algorithm::kMAML).D_h == 2);

  const BatchSpec noisy = recommended_batches(profile(1.0, 0.0, 1.0, 1.0), 0.1, 0.5, Algorithm::kMAML);
  CHECK(noisy.D_in == 244);
  CHECK(noisy.D_o == 1);
  CHECK(noisy.B * noisy.D_o >= 244);
  CHECK_THROWS_AS(recommended_batches(profile(1, 0, 0, 0), 0.1, 0.0, Algorithm::kMAML), std::invalid_argument);
}

TEST_CASE("FO-MAML batches stop growing below its floor") {
  const SmoothnessProfile p = profile(2.0, 0.0, 1.0, 1.0);
  const BatchSpec tiny = recommended_batches(p, 0.1, 1e-6, Algorithm::kFOMAML);
  const BatchSpec floor = recommended_batches(p, 0.1, 0.1 * 1.0 * 2.0, Algorithm::kFOMAML);
  CHECK(tiny == floor);
}

TEST_CASE("step fractions and caps") {
  CHECK(default_step_fraction(Algorithm::kMAML) == doctest::Approx(1.0 / 12));
  CHECK(default_step_fraction(Algorithm::kFOMAML) == doctest::Approx(1.0 / 18));
  CHECK(default_step_fraction(Algorithm::kHFMAML) == doctest::Approx(1.0 / 25));
  CHECK(alpha_l_cap(Algorithm::kFOMAML) == doctest::Approx(0.1));
  CHECK(StepsizeRule::adaptive(0.5).resolved_fraction(Algorithm::kMAML) == 0.5);
}

TEST_CASE("beta tilde moments on an MF family") {
  const TaskFamily m = generate_mf_family(8, 3, 1.0, RngStream(9));
  SmoothnessProfile p = local_smoothness(m, 2.0, Vec(3), {1.0, 0.0});
  const double alpha = 0.1;
  const int Bp = static_cast<int>(std::max<long long>(1, min_stepsize_task_batch(p, alpha)));
  const int Db = static_cast<int>(std::max<long long>(1, min_stepsize_data_batch(p, alpha)));
  const Vec w{0.4, -0.3, 0.5};
  const double Lw = smoothness_L_of_w(m, w, alpha, p);
  const int n = 100000;
  double s1 = 0, s2 = 0, s1sq = 0, s2sq = 0;
  for (int k = 0; k < n; ++k) {
    const double b = beta_tilde(m, w, alpha, p, Bp, Db, RngStream(10).derive(k)).beta_tilde;
    s1 += b;
    s1sq += b * b;
    s2 += b * b;
    s2sq += b * b * b * b;
  }
  const double m1 = s1 / n, m2 = s2 / n;
  const double se1 = std::sqrt((s1sq / n - m1 * m1) / n);
  const double se2 = std::sqrt((s2sq / n - m2 * m2) / n);
  CHECK(m1 >= 0.8 / Lw - 3 * se1);
  CHECK(m2 <= 3.125 / (Lw * Lw) + 3 * se2);
}
