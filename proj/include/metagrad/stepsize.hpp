#pragma once

#include <optional>
#include <string>

#include "metagrad/meta_gradient.hpp"
#include "metagrad/rng.hpp"
#include "metagrad/stochastic_oracle.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

// Default fractions c in beta_k = c * beta_tilde(w_k).
inline constexpr double kMamlStepFraction = 1.0 / 12.0;
inline constexpr double kFomamlStepFraction = 1.0 / 18.0;
inline constexpr double kHfmamlStepFraction = 1.0 / 25.0;

double default_step_fraction(Algorithm algorithm);

// Largest alpha * L for which the adaptive rule's guarantees apply.
double alpha_l_cap(Algorithm algorithm);

struct StepsizeRule {
  enum class Kind { kConstant, kAdaptive };
  Kind kind = Kind::kAdaptive;
  double beta = 0.0;
  // Unset means default_step_fraction(algorithm).
  std::optional<double> fraction;

  static StepsizeRule constant(double beta) { return {Kind::kConstant, beta, std::nullopt}; }
  static StepsizeRule adaptive(std::optional<double> fraction = std::nullopt) {
    return {Kind::kAdaptive, 0.0, fraction};
  }
  double resolved_fraction(Algorithm algorithm) const { return fraction.value_or(default_step_fraction(algorithm)); }
};

struct StepsizeSample {
  double L_tilde = 0.0;
  double beta_tilde = 0.0;
};

// ceil(x) that ignores round-off just above an integer.
long long tolerant_ceil(double x);

// L(w) = 4L + 2 rho alpha sum_i p_i ||grad f_i(w)||, L and rho from the profile.
double smoothness_L_of_w(const TaskFamily& family, const Vec& w, double alpha, const SmoothnessProfile& profile);

// ceil(0.5 (rho alpha sigma / L)^2)
long long min_stepsize_task_batch(const SmoothnessProfile& profile, double alpha);
// ceil((2 rho alpha sigma_tilde / L)^2)
long long min_stepsize_data_batch(const SmoothnessProfile& profile, double alpha);

bool batch_conditions_ok(const SmoothnessProfile& profile, double alpha, int B_prime, int D_beta);

// 1 / (4L + (2 rho alpha / B') sum_{j in B'} ||g~_j(w, D_beta)||) on a fresh task
// batch drawn from `rng`. Throws InvalidBatchConfig when the batch sizes are too small.
StepsizeSample beta_tilde(const TaskFamily& family, const Vec& w, double alpha, const SmoothnessProfile& profile,
                          int B_prime, int D_beta, const RngStream& rng);

// Minimum D_h: ceil(2 alpha^2 sigma_H^2) for MAML and FO-MAML,
// ceil(36 (alpha rho sigma_tilde)^2) for HF-MAML.
long long min_hessian_batch(Algorithm algorithm, const SmoothnessProfile& profile, double alpha);

inline constexpr int kMinTaskBatch = 20;
inline constexpr double kBatchConstant = 61.0;

// Smallest batches meeting the large-batch conditions for target accuracy eps.
// FO-MAML targets max(eps, alpha sigma L), below which it cannot go.
BatchSpec recommended_batches(const SmoothnessProfile& profile, double alpha, double eps, Algorithm algorithm);

}  // namespace metagrad
