#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "metagrad/meta_gradient.hpp"
#include "metagrad/stepsize.hpp"
#include "metagrad/stochastic_oracle.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::kMAML;
  double alpha = 0.01;
  StepsizeRule stepsize = StepsizeRule::adaptive();
  BatchSpec batches;
  NoiseModel noise;
  int max_iters = 1000;
  // Stop once the exact ||grad F|| drops to this value; 0 disables.
  double target_grad_norm = 0.0;
  std::uint64_t seed = 1;
  // Ball (around trust_ball_center, zero when empty) used for the smoothness
  // profile; leaving it by 10x aborts the run.
  double trust_ball_radius = 10.0;
  Vec trust_ball_center;
  // Initial iterate; zero when empty.
  Vec w0;
  // Keep every n-th iterate in RunRecord::iterates; 0 keeps none.
  int iterate_thinning = 0;
  // HF-MAML: fixed finite-difference delta instead of the adaptive rule.
  std::optional<double> fixed_delta;
  // Workers for per-task directions within one iteration.
  int threads = 1;
  // Without exact monitoring the loss and ||grad F|| columns stay empty and the
  // run stops on max_iters only.
  bool monitor_exact = true;
};

inline constexpr double kDivergenceFactor = 10.0;

struct RunRow {
  int iter = 0;
  std::optional<double> grad_norm_F;
  std::optional<double> loss_F;
  std::optional<double> beta;
  std::optional<double> dist_wstar;
  std::optional<double> dist_wfo;
};

struct RunSummary {
  // F(w_0) - min F: exact for quadratics, trajectory minimum otherwise.
  std::optional<double> delta;
  std::optional<int> iterations_to_eps;
  double best_grad_norm = 0.0;
  int best_iter = 0;
  double last_grad_norm = 0.0;
  // Mean ||grad F|| over the last quarter of the rows.
  double tail_mean_grad_norm = 0.0;
  Vec final_w;
};

struct RunRecord {
  Algorithm algorithm = Algorithm::kMAML;
  std::vector<RunRow> rows;
  std::vector<std::pair<int, Vec>> iterates;
  RunSummary summary;
  std::vector<std::string> warnings;
};

// Convergence-guarantee preconditions. Throws ConfigError; returns soft warnings.
std::vector<std::string> validate_config(const TaskFamily& family, const OptimizerConfig& config,
                                         const SmoothnessProfile& profile);

// Profile over the configured trust ball, with the configured noise levels.
SmoothnessProfile profile_for(const TaskFamily& family, const OptimizerConfig& config);

// Combined direction for one iteration; `slot_rng` is derived per task slot.
MetaGradEstimate batch_direction(const TaskFamily& family, const OptimizerConfig& config,
                                 const SmoothnessProfile& profile, const Vec& w, const RngStream& iteration_rng,
                                 bool keep_per_task = false);

RunRecord run(const TaskFamily& family, const OptimizerConfig& config);
RunRecord run(const TaskFamily& family, const OptimizerConfig& config, const SmoothnessProfile& profile);

// One run per algorithm sharing `base.seed`, so task batches and noise draws coincide.
std::vector<RunRecord> run_comparison(const TaskFamily& family, const OptimizerConfig& base,
                                      const std::vector<Algorithm>& algorithms);

// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// METAGRAD_THREADS, 0 or unset meaning hardware concurrency.
int worker_count_from_env();

}  // namespace metagrad
