#pragma once

#include <optional>
#include <string>
#include <vector>

#include "metagrad/numerics.hpp"
#include "metagrad/rng.hpp"
#include "metagrad/stochastic_oracle.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

enum class Algorithm { kMAML, kFOMAML, kHFMAML };

std::string to_string(Algorithm algorithm);
// Accepts "maml", "fomaml", "hfmaml" (case-insensitive, '-' ignored).
Algorithm algorithm_from_string(const std::string& name);

// Batch-mean descent direction of one algorithm.
struct MetaGradEstimate {
  Vec direction;
  std::vector<Vec> per_task;
  Algorithm algorithm = Algorithm::kMAML;
};

// Finite-difference Hessian-vector probe.
struct HvpProbe {
  Vec v;
  double delta = 0.0;
  Vec d;
};

// Below this probe norm the HVP correction is dropped.
inline constexpr double kNullProbeNorm = 1e-12;

// w - alpha * noisy_grad(task, w, D_in)
Vec inner_step(const TaskOracle& task, const Vec& w, double alpha, int D_in, double sigma_tilde,
               const RngStream& rng);

// The per-slot stream `rng` is split into independent inner, outer and Hessian paths.
Vec maml_direction(const TaskOracle& task, const Vec& w, double alpha, const NoiseModel& noise,
                   const BatchSpec& spec, const RngStream& rng);

Vec fomaml_direction(const TaskOracle& task, const Vec& w, double alpha, const NoiseModel& noise,
                     const BatchSpec& spec, const RngStream& rng);

// (g(w + delta v) - g(w - delta v)) / (2 delta), both probe gradients carrying the
// same D_h noise draw.
Vec hvp_finite_diff(const TaskOracle& task, const Vec& w, const Vec& v, double delta, int D_h,
                    double sigma_tilde, const RngStream& rng);

// delta = 1 / (6 rho alpha ||v||) for rho > 0, else 1e-3 (1 + ||w||).
double hf_delta(double rho, double alpha, double probe_norm, const Vec& w);

// v - alpha * hvp_finite_diff(w, v, delta) with v the outer stochastic gradient.
// `fixed_delta` overrides the adaptive rule. `probe` receives the HVP details.
Vec hfmaml_direction(const TaskOracle& task, const Vec& w, double alpha, double rho,
                     const NoiseModel& noise, const BatchSpec& spec, const RngStream& rng,
                     std::optional<double> fixed_delta = std::nullopt, HvpProbe* probe = nullptr);

Vec task_direction(Algorithm algorithm, const TaskOracle& task, const Vec& w, double alpha, double rho,
                   const NoiseModel& noise, const BatchSpec& spec, const RngStream& rng,
                   std::optional<double> fixed_delta = std::nullopt);

// F(w) = sum_i p_i f_i(w - alpha grad f_i(w))
double exact_F(const TaskFamily& family, const Vec& w, double alpha);

// grad F(w) = sum_i p_i (I - alpha hess f_i(w)) grad f_i(w - alpha grad f_i(w))
Vec exact_grad_F(const TaskFamily& family, const Vec& w, double alpha);

// Vector Monte Carlo mean with the norm of its standard-error vector.
struct McEstimate {
  Vec mean;
  double standard_error = 0.0;
  int samples = 0;
};

// Monte Carlo estimate of grad F_hat(w). Each draw sweeps every task with weight
// p_i and evaluates (I - alpha H~_i) grad f_i(w - alpha g~_i) with D_test-sized
// noisy oracles.
McEstimate mc_grad_F_hat(const TaskFamily& family, const Vec& w, double alpha, const NoiseModel& noise,
                         int D_test, int n_mc, const RngStream& rng);

// Accumulates vector samples; reports mean and ||SE||.
class VecMoments {
 public:
  explicit VecMoments(std::size_t dim) : sum_(dim), sum_sq_(dim) {}
  void add(const Vec& x);
  int count() const { return count_; }
  Vec mean() const;
  // sqrt(sum_j var_j / n)
  double standard_error() const;

 private:
  Vec sum_;
  Vec sum_sq_;
  int count_ = 0;
};

}  // namespace metagrad
