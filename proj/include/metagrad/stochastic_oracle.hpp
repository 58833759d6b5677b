#pragma once

#include <cstddef>
#include <vector>

#include "metagrad/numerics.hpp"
#include "metagrad/rng.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

// Task batch size B, stepsize task batch B', and per-purpose data batch sizes.
struct BatchSpec {
  int B = 20;
  int B_prime = 1;
  int D_in = 1;
  int D_o = 1;
  int D_h = 1;
  int D_beta = 1;
  int D_test = 1;
  // Replace the i.i.d. task batch by a p-weighted sweep over every task.
  bool full_task_sweep = false;

  bool operator==(const BatchSpec&) const = default;
};

// Throws ConfigError naming the first field below 1.
void validate(const BatchSpec& spec);

// grad f_i(w) + z with z ~ N(0, sigma_tilde^2 / (d * D) I), so E||z||^2 = sigma_tilde^2 / D.
Vec noisy_grad(const TaskOracle& task, const Vec& w, int D, double sigma_tilde, const RngStream& rng);

// Same noise applied to an already computed exact gradient.
Vec add_gradient_noise(Vec exact, int D, double sigma_tilde, const RngStream& rng);

// hess f_i(w) + E, E symmetric Gaussian with E||E||_F^2 = sigma_H^2 / D.
Mat noisy_hess(const TaskOracle& task, const Vec& w, int D, double sigma_H, const RngStream& rng);

// n i.i.d. indices drawn from the family weights (with replacement).
std::vector<std::size_t> sample_task_batch(const TaskFamily& family, int n, const RngStream& rng);

}  // namespace metagrad
