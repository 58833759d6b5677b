#include "metagrad/stepsize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "metagrad/error.hpp"

namespace metagrad {

double default_step_fraction(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kMAML:
      return kMamlStepFraction;
    case Algorithm::kFOMAML:
      return kFomamlStepFraction;
    case Algorithm::kHFMAML:
      return kHfmamlStepFraction;
  }
  return kMamlStepFraction;
}

double alpha_l_cap(Algorithm algorithm) { return algorithm == Algorithm::kFOMAML ? 0.1 : 1.0 / 6.0; }

long long tolerant_ceil(double x) {
  if (!std::isfinite(x)) return std::numeric_limits<long long>::max();
  const double slack = 1e-9 * std::max(1.0, std::abs(x));
  return static_cast<long long>(std::ceil(x - slack));
}

double smoothness_L_of_w(const TaskFamily& family, const Vec& w, double alpha, const SmoothnessProfile& profile) {
  double expected_norm = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) expected_norm += family.weight(i) * norm(family.task(i).gradient(w));
  return 4.0 * profile.L + 2.0 * profile.rho * alpha * expected_norm;
}

namespace {

double ratio_over_L(double numerator, double L) {
  if (numerator == 0.0) return 0.0;
  if (L <= 0.0) return std::numeric_limits<double>::infinity();
  return numerator / L;
}

}  // namespace

long long min_stepsize_task_batch(const SmoothnessProfile& profile, double alpha) {
  const double r = ratio_over_L(profile.rho * alpha * profile.sigma, profile.L);
  return tolerant_ceil(0.5 * r * r);
}

long long min_stepsize_data_batch(const SmoothnessProfile& profile, double alpha) {
  const double r = ratio_over_L(2.0 * profile.rho * alpha * profile.sigma_tilde, profile.L);
  return tolerant_ceil(r * r);
}

bool batch_conditions_ok(const SmoothnessProfile& profile, double alpha, int B_prime, int D_beta) {
  return B_prime >= 1 && D_beta >= 1 && B_prime >= min_stepsize_task_batch(profile, alpha) &&
         D_beta >= min_stepsize_data_batch(profile, alpha);
}

StepsizeSample beta_tilde(const TaskFamily& family, const Vec& w, double alpha, const SmoothnessProfile& profile,
                          int B_prime, int D_beta, const RngStream& rng) {
  if (!batch_conditions_ok(profile, alpha, B_prime, D_beta)) {
    throw InvalidBatchConfig("beta_tilde: need B'=" + std::to_string(B_prime) +
                             " >= " + std::to_string(min_stepsize_task_batch(profile, alpha)) +
                             " and D_beta=" + std::to_string(D_beta) +
                             " >= " + std::to_string(min_stepsize_data_batch(profile, alpha)));
  }
  double L_tilde = 4.0 * profile.L;
  if (profile.rho > 0.0 && alpha > 0.0) {
    const auto batch = sample_task_batch(family, B_prime, rng.derive(Purpose::kStepsizeBatch));
    const RngStream data = rng.derive(Purpose::kStepsize);
    double acc = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
      acc += norm(noisy_grad(family.task(batch[j]), w, D_beta, profile.sigma_tilde, data.derive(j)));
    }
    L_tilde += 2.0 * profile.rho * alpha * acc / static_cast<double>(B_prime);
  }
  return StepsizeSample{L_tilde, 1.0 / L_tilde};
}

long long min_hessian_batch(Algorithm algorithm, const SmoothnessProfile& profile, double alpha) {
  if (algorithm == Algorithm::kHFMAML) {
    const double r = alpha * profile.rho * profile.sigma_tilde;
    return tolerant_ceil(36.0 * r * r);
  }
  return tolerant_ceil(2.0 * alpha * alpha * profile.sigma_H * profile.sigma_H);
}

BatchSpec recommended_batches(const SmoothnessProfile& profile, double alpha, double eps, Algorithm algorithm) {
  if (!(eps > 0.0)) throw std::invalid_argument("recommended_batches: eps must be positive");
  const double target =
      algorithm == Algorithm::kFOMAML ? std::max(eps, alpha * profile.sigma * profile.L) : eps;
  const double t2 = target * target;
  const auto at_least_one = [](long long v) { return static_cast<int>(std::max<long long>(1, v)); };

  BatchSpec spec;
  spec.B = static_cast<int>(std::max<long long>(kMinTaskBatch, tolerant_ceil(kBatchConstant * profile.sigma * profile.sigma / t2)));
  const double noise = kBatchConstant * profile.sigma_tilde * profile.sigma_tilde / t2;
  spec.D_in = at_least_one(tolerant_ceil(noise));
  spec.D_o = at_least_one(tolerant_ceil(noise / spec.B));
  spec.D_h = at_least_one(min_hessian_batch(algorithm, profile, alpha));
  spec.B_prime = at_least_one(min_stepsize_task_batch(profile, alpha));
  spec.D_beta = at_least_one(min_stepsize_data_batch(profile, alpha));
  spec.D_test = spec.D_in;
  return spec;
}

}  // namespace metagrad
