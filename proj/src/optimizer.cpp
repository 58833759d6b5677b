#include "metagrad/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "metagrad/closed_form.hpp"
#include "metagrad/error.hpp"

namespace metagrad {

namespace {

Vec or_zeros(const Vec& v, std::size_t dim) { return v.dim() == 0 ? Vec(dim) : v; }

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  const std::size_t used = std::min(workers, n);
  for (std::size_t t = 0; t < used; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += used) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

int worker_count_from_env() {
  const char* raw = std::getenv("METAGRAD_THREADS");
  int requested = 0;
  if (raw != nullptr && *raw != '\0') {
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (end == raw || *end != '\0' || v < 0) throw ConfigError("METAGRAD_THREADS must be a non-negative integer");
    requested = static_cast<int>(v);
  }
  if (requested == 0) requested = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return requested;
}

SmoothnessProfile profile_for(const TaskFamily& family, const OptimizerConfig& config) {
  return local_smoothness(family, config.trust_ball_radius, or_zeros(config.trust_ball_center, family.dim()),
                          config.noise);
}

std::vector<std::string> validate_config(const TaskFamily& family, const OptimizerConfig& config,
                                         const SmoothnessProfile& profile) {
  std::vector<std::string> warnings;
  if (!(config.alpha > 0.0) || !std::isfinite(config.alpha)) throw ConfigError("alpha=" + fmt(config.alpha) + " must be positive");
  if (config.max_iters < 0) throw ConfigError("max_iters must be >= 0");
  if (!(config.target_grad_norm >= 0.0)) throw ConfigError("target_grad_norm must be >= 0");
  if (!(config.trust_ball_radius > 0.0)) throw ConfigError("trust_ball_radius must be positive");
  if (config.w0.dim() != 0 && config.w0.dim() != family.dim()) {
    throw ConfigError("w0 has dimension " + std::to_string(config.w0.dim()) + ", family has " + std::to_string(family.dim()));
  }
  if (config.trust_ball_center.dim() != 0 && config.trust_ball_center.dim() != family.dim()) {
    throw ConfigError("trust_ball_center has the wrong dimension");
  }
  if (!(config.noise.sigma_tilde >= 0.0) || !(config.noise.sigma_H >= 0.0)) throw ConfigError("noise levels must be >= 0");
  if (config.fixed_delta && !(*config.fixed_delta > 0.0)) throw ConfigError("fixed_delta must be positive");
  validate(config.batches);

  const BatchSpec& b = config.batches;
  const long long need_dh = min_hessian_batch(config.algorithm, profile, config.alpha);
  if (config.algorithm == Algorithm::kHFMAML && b.D_h < need_dh) {
    throw ConfigError("D_h=" + std::to_string(b.D_h) + " < ceil(36(alpha rho sigma_tilde)^2)=" + std::to_string(need_dh));
  }
  if (config.algorithm == Algorithm::kMAML && b.D_h < need_dh) {
    throw ConfigError("D_h=" + std::to_string(b.D_h) + " < ceil(2 alpha^2 sigma_H^2)=" + std::to_string(need_dh));
  }

  if (config.stepsize.kind == StepsizeRule::Kind::kConstant) {
    if (!(config.stepsize.beta > 0.0)) throw ConfigError("constant stepsize beta must be positive");
  } else {
    const double c = config.stepsize.resolved_fraction(config.algorithm);
    if (!(c > 0.0)) throw ConfigError("adaptive stepsize fraction must be positive");
    if (!batch_conditions_ok(profile, config.alpha, b.B_prime, b.D_beta)) {
      throw InvalidBatchConfig("B_prime=" + std::to_string(b.B_prime) + " must be >= ceil(0.5(rho alpha sigma/L)^2)=" +
                               std::to_string(min_stepsize_task_batch(profile, config.alpha)) + " and D_beta=" +
                               std::to_string(b.D_beta) + " >= ceil((2 rho alpha sigma_tilde/L)^2)=" +
                               std::to_string(min_stepsize_data_batch(profile, config.alpha)));
    }
    const double cap = alpha_l_cap(config.algorithm);
    if (config.alpha * profile.L > cap * (1.0 + 1e-12)) {
      warnings.push_back("alpha L = " + fmt(config.alpha * profile.L) + " exceeds " + fmt(cap) + " for " +
                         to_string(config.algorithm));
    }
  }
  if (!b.full_task_sweep && b.B < kMinTaskBatch) {
    warnings.push_back("B=" + std::to_string(b.B) + " < 20");
  }
  return warnings;
}

MetaGradEstimate batch_direction(const TaskFamily& family, const OptimizerConfig& config,
                                 const SmoothnessProfile& profile, const Vec& w, const RngStream& iteration_rng,
                                 bool keep_per_task) {
  std::vector<std::size_t> slots;
  std::vector<double> slot_weights;
  if (config.batches.full_task_sweep) {
    slots.resize(family.size());
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
    slot_weights = family.weights();
  } else {
    slots = sample_task_batch(family, config.batches.B, iteration_rng.derive(Purpose::kTaskBatch));
    slot_weights.assign(slots.size(), 1.0 / static_cast<double>(slots.size()));
  }

  const RngStream slot_root = iteration_rng.derive(Purpose::kTaskSlot);
  std::vector<Vec> per_task(slots.size());
  parallel_for(slots.size(), config.threads, [&](std::size_t s) {
    per_task[s] = task_direction(config.algorithm, family.task(slots[s]), w, config.alpha, profile.rho, config.noise,
                                 config.batches, slot_root.derive(s), config.fixed_delta);
  });

  MetaGradEstimate out;
  out.algorithm = config.algorithm;
  out.direction = Vec(family.dim());
  // Fixed slot order keeps the reduction deterministic.
  for (std::size_t s = 0; s < slots.size(); ++s) out.direction += slot_weights[s] * per_task[s];
  if (keep_per_task) out.per_task = std::move(per_task);
  return out;
}

RunRecord run(const TaskFamily& family, const OptimizerConfig& config) {
  return run(family, config, profile_for(family, config));
}

RunRecord run(const TaskFamily& family, const OptimizerConfig& config, const SmoothnessProfile& profile) {
  RunRecord record;
  record.algorithm = config.algorithm;
  record.warnings = validate_config(family, config, profile);

  const std::size_t d = family.dim();
  const Vec center = or_zeros(config.trust_ball_center, d);
  Vec w = or_zeros(config.w0, d);

  std::optional<Vec> w_star;
  std::optional<Vec> w_fo;
  if (family.kind() == FamilyKind::kQuadratic && config.alpha * profile.L < 1.0) {
    w_star = solve_quadratic_maml(family, config.alpha);
    w_fo = solve_quadratic_fo(family, config.alpha);
  }

  const RngStream root(config.seed);
  const double fraction = config.stepsize.resolved_fraction(config.algorithm);
  double best = std::numeric_limits<double>::infinity();
  double min_loss = std::numeric_limits<double>::infinity();
  double initial_loss = 0.0;

  for (int k = 0;; ++k) {
    RunRow row;
    row.iter = k;
    if (config.monitor_exact) {
      const double gn = norm(exact_grad_F(family, w, config.alpha));
      const double loss = exact_F(family, w, config.alpha);
      row.grad_norm_F = gn;
      row.loss_F = loss;
      if (k == 0) initial_loss = loss;
      min_loss = std::min(min_loss, loss);
      if (gn < best) {
        best = gn;
        record.summary.best_iter = k;
      }
      if (!record.summary.iterations_to_eps && config.target_grad_norm > 0.0 && gn <= config.target_grad_norm) {
        record.summary.iterations_to_eps = k;
      }
    }
    if (w_star) row.dist_wstar = norm(w - *w_star);
    if (w_fo) row.dist_wfo = norm(w - *w_fo);
    if (config.iterate_thinning > 0 && k % config.iterate_thinning == 0) record.iterates.emplace_back(k, w);

    const bool reached = record.summary.iterations_to_eps.has_value();
    if (k >= config.max_iters || reached) {
      record.rows.push_back(row);
      break;
    }

    const RngStream it = root.derive(static_cast<std::uint64_t>(k));
    double beta = config.stepsize.beta;
    if (config.stepsize.kind == StepsizeRule::Kind::kAdaptive) {
      beta = fraction * beta_tilde(family, w, config.alpha, profile, config.batches.B_prime, config.batches.D_beta,
                                   it.derive(Purpose::kStepsize))
                            .beta_tilde;
    }
    row.beta = beta;
    record.rows.push_back(row);

    const MetaGradEstimate g = batch_direction(family, config, profile, w, it);
    w = axpy(w, -beta, g.direction);
    if (!all_finite(w)) {
      throw NumericalFailure("non-finite iterate at iteration " + std::to_string(k + 1) + " (" +
                             to_string(config.algorithm) + ")");
    }
    const double excursion = norm(w - center);
    if (excursion > kDivergenceFactor * config.trust_ball_radius) {
      throw DivergenceDetected("iterate left 10x the trust ball at iteration " + std::to_string(k + 1) + " (" +
                               to_string(config.algorithm) + ", distance " + fmt(excursion) + ")");
    }
  }

  RunSummary& s = record.summary;
  s.final_w = w;
  if (config.monitor_exact && !record.rows.empty()) {
    s.best_grad_norm = best;
    s.last_grad_norm = *record.rows.back().grad_norm_F;
    const std::size_t n = record.rows.size();
    const std::size_t tail = std::max<std::size_t>(1, n / 4);
    double acc = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) acc += *record.rows[i].grad_norm_F;
    s.tail_mean_grad_norm = acc / static_cast<double>(tail);
    s.delta = initial_loss - (w_star ? exact_F(family, *w_star, config.alpha) : min_loss);
  }
  return record;
}

std::vector<RunRecord> run_comparison(const TaskFamily& family, const OptimizerConfig& base,
                                      const std::vector<Algorithm>& algorithms) {
  const SmoothnessProfile profile = profile_for(family, base);
  std::vector<RunRecord> out;
  out.reserve(algorithms.size());
  for (Algorithm a : algorithms) {
    OptimizerConfig config = base;
    config.algorithm = a;
    out.push_back(run(family, config, profile));
  }
  return out;
}

}  // namespace metagrad
