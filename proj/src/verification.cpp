#include "metagrad/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "metagrad/meta_gradient.hpp"
#include "metagrad/stepsize.hpp"
#include "metagrad/stochastic_oracle.hpp"

namespace metagrad {

BoundAudit BoundAudit::make(std::string name, double measured, double bound, double mc_margin, int samples,
                            double standard_error) {
  BoundAudit a;
  a.name = std::move(name);
  a.measured = measured;
  a.bound = bound;
  a.mc_margin = std::max(0.0, mc_margin);
  a.samples = std::max(1, samples);
  a.standard_error = standard_error;
  a.passed = measured <= bound + a.mc_margin;
  return a;
}

nlohmann::json to_json(const BoundAudit& audit) {
  return {{"name", audit.name},         {"measured", audit.measured}, {"bound", audit.bound},
          {"mc_margin", audit.mc_margin}, {"samples", audit.samples},   {"standard_error", audit.standard_error},
          {"passed", audit.passed}};
}

namespace {

void require_draws(int n_mc, const char* what) {
  if (n_mc < kMinAuditDraws) {
    throw std::invalid_argument(std::string(what) + ": n_mc must be >= " + std::to_string(kMinAuditDraws));
  }
}

// Antithetic pair of outer-gradient samples at the adapted point.
struct OuterPair {
  Vec plus;
  Vec minus;
};

OuterPair outer_pair(const TaskOracle& task, const Vec& w, const Vec& exact_grad, double alpha, int D_in, int D_o,
                     double sigma_tilde, const RngStream& draw) {
  const std::size_t d = w.dim();
  const Vec z_in = add_gradient_noise(Vec(d), D_in, sigma_tilde, draw.derive(Purpose::kInner));
  const Vec z_o = add_gradient_noise(Vec(d), D_o, sigma_tilde, draw.derive(Purpose::kOuter));
  OuterPair p;
  p.plus = task.gradient(axpy(w, -alpha, exact_grad + z_in)) + z_o;
  p.minus = task.gradient(axpy(w, -alpha, exact_grad - z_in)) - z_o;
  return p;
}

}  // namespace

BoundAudit audit_bias(const TaskFamily& family, std::size_t task_index, const Vec& w, double alpha,
                      const SmoothnessProfile& profile, int D_in, int D_o, int n_mc, const RngStream& rng) {
  require_draws(n_mc, "audit_bias");
  const TaskOracle& task = family.task(task_index);
  const Vec g = task.gradient(w);
  const Vec target = task.gradient(axpy(w, -alpha, g));
  VecMoments pairs(w.dim());
  const int n_pairs = n_mc / 2;
  for (int s = 0; s < n_pairs; ++s) {
    const OuterPair p = outer_pair(task, w, g, alpha, D_in, D_o, profile.sigma_tilde, rng.derive(s));
    // Deviations from the target, so the noise-free case is exactly zero.
    pairs.add(0.5 * (p.plus + p.minus) - target);
  }
  const double measured = norm(pairs.mean());
  const double bound = alpha * profile.L * profile.sigma_tilde / std::sqrt(static_cast<double>(D_in));
  const double se = pairs.standard_error();
  return BoundAudit::make("inner_bias D_in=" + std::to_string(D_in), measured, bound, kAuditSeMultiplier * se,
                          2 * n_pairs, se);
}

BoundAudit audit_second_moment(const TaskFamily& family, std::size_t task_index, const Vec& w, double alpha,
                               const SmoothnessProfile& profile, int D_in, int D_o, double phi, int n_mc,
                               const RngStream& rng) {
  if (!(phi > 0.0)) throw std::invalid_argument("audit_second_moment: phi must be positive");
  require_draws(n_mc, "audit_second_moment");
  const TaskOracle& task = family.task(task_index);
  const Vec g = task.gradient(w);
  const Vec target = task.gradient(axpy(w, -alpha, g));
  const int n_pairs = n_mc / 2;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < n_pairs; ++s) {
    const OuterPair p = outer_pair(task, w, g, alpha, D_in, D_o, profile.sigma_tilde, rng.derive(s));
    const double x = 0.5 * (squared_norm(p.plus) + squared_norm(p.minus));
    sum += x;
    sum_sq += x * x;
  }
  const double n = n_pairs;
  const double mean = sum / n;
  const double se = n > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) / n) : 0.0;
  const double st2 = profile.sigma_tilde * profile.sigma_tilde;
  const double bound = (1.0 + 1.0 / phi) * squared_norm(target) +
                       (1.0 + phi) * alpha * alpha * profile.L * profile.L * st2 / D_in + st2 / D_o;
  return BoundAudit::make("inner_second_moment D_in=" + std::to_string(D_in), mean, bound, kAuditSeMultiplier * se,
                          2 * n_pairs, se);
}

BoundAudit audit_grad_gap_F_hat(const TaskFamily& family, const Vec& w, double alpha, const SmoothnessProfile& profile,
                                int D_test, int n_mc, const RngStream& rng) {
  require_draws(n_mc, "audit_grad_gap_F_hat");
  const NoiseModel noise{profile.sigma_tilde, profile.sigma_H};
  const McEstimate est = mc_grad_F_hat(family, w, alpha, noise, D_test, n_mc, rng);
  const double measured = norm(est.mean - exact_grad_F(family, w, alpha));
  const double D = D_test;
  const double bound = 2.0 * alpha * profile.L * profile.sigma_tilde / std::sqrt(D) +
                       alpha * alpha * profile.L * profile.sigma_H * profile.sigma_tilde / D;
  return BoundAudit::make("thm1_grad_gap D_test=" + std::to_string(D_test), measured, bound,
                          kAuditSeMultiplier * est.standard_error, est.samples, est.standard_error);
}

std::vector<BoundAudit> audit_stepsize_moments(const TaskFamily& family, const Vec& w, double alpha,
                                               const SmoothnessProfile& profile, int B_prime, int D_beta, int n_samples,
                                               const RngStream& rng) {
  if (n_samples < 2) throw std::invalid_argument("audit_stepsize_moments: n_samples < 2");
  double s1 = 0.0, s1sq = 0.0, s2 = 0.0, s2sq = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const double b = beta_tilde(family, w, alpha, profile, B_prime, D_beta, rng.derive(s)).beta_tilde;
    s1 += b;
    s1sq += b * b;
    s2 += b * b;
    s2sq += b * b * b * b;
  }
  const double n = n_samples;
  const auto se_of = [n](double sum, double sum_sq) {
    const double m = sum / n;
    return std::sqrt(std::max(0.0, (sum_sq - n * m * m) / (n - 1.0)) / n);
  };
  const double L_w = smoothness_L_of_w(family, w, alpha, profile);
  const double se1 = se_of(s1, s1sq);
  const double se2 = se_of(s2, s2sq);
  return {
      BoundAudit::make("stepsize_first_moment_shortfall", 0.8 / L_w - s1 / n, 0.0, kStepsizeSeMultiplier * se1,
                       n_samples, se1),
      BoundAudit::make("stepsize_second_moment", s2 / n, 3.125 / (L_w * L_w), kStepsizeSeMultiplier * se2, n_samples,
                       se2),
  };
}

BoundAudit audit_smoothness(const TaskFamily& family, double alpha, const SmoothnessProfile& profile, int n_pairs,
                            const RngStream& rng) {
  if (n_pairs < 1) throw std::invalid_argument("audit_smoothness: n_pairs < 1");
  double worst = 0.0;
  for (int s = 0; s < n_pairs; ++s) {
    const RngStream pair = rng.derive(s);
    const Vec w = sample_in_ball(pair.derive(0), profile.center, profile.radius);
    const Vec u = sample_in_ball(pair.derive(1), profile.center, profile.radius);
    const double dist = norm(w - u);
    if (dist == 0.0) continue;
    const double lhs = norm(exact_grad_F(family, w, alpha) - exact_grad_F(family, u, alpha));
    const double L = std::min(smoothness_L_of_w(family, w, alpha, profile), smoothness_L_of_w(family, u, alpha, profile));
    worst = std::max(worst, lhs / (L * dist));
  }
  return BoundAudit::make("smoothness_ratio", worst, 1.0, 0.0, n_pairs);
}

BoundAudit audit_hvp_error(const TaskFamily& family, const SmoothnessProfile& profile, int n_probes,
                           const RngStream& rng) {
  if (n_probes < 1) throw std::invalid_argument("audit_hvp_error: n_probes < 1");
  const std::size_t d = family.dim();
  double worst = 0.0;
  for (int s = 0; s < n_probes; ++s) {
    const RngStream probe = rng.derive(s);
    const std::size_t task_index = sample_task_batch(family, 1, probe.derive(0)).front();
    const TaskOracle& task = family.task(task_index);
    // w in the inner half of the ball, ||v|| <= 1, delta ||v|| <= radius / 2.
    const Vec w = sample_in_ball(probe.derive(1), profile.center, 0.5 * profile.radius);
    Vec v = gaussian(probe.derive(2), d, 1.0);
    v *= probe.uniform(3) / std::max(norm(v), 1e-300);
    const double vn = norm(v);
    if (vn == 0.0) continue;
    const double log_delta = -3.0 + 2.0 * probe.uniform(4);
    const double delta = std::min(std::pow(10.0, log_delta), 0.5 * profile.radius / vn);
    const Vec fd = hvp_finite_diff(task, w, v, delta, 1, 0.0, probe.derive(5));
    const double err = norm(fd - task.hessian_vector(w, v));
    const double bound = profile.rho * delta * vn * vn;
    worst = std::max(worst, bound > 0.0 ? err / bound : (err > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
  }
  return BoundAudit::make("hvp_error_ratio", worst, 1.0, 0.0, n_probes);
}

std::vector<KShotFloor> audit_kshot_floor(const TaskFamily& family, const std::vector<int>& K_list,
                                          const OptimizerConfig& config) {
  if (!std::is_sorted(K_list.begin(), K_list.end())) throw std::invalid_argument("audit_kshot_floor: K_list must ascend");
  const SmoothnessProfile profile = profile_for(family, config);
  std::vector<KShotFloor> out;
  for (int K : K_list) {
    OptimizerConfig c = config;
    c.algorithm = Algorithm::kMAML;
    c.batches.D_in = K;
    const RunRecord r = run(family, c, profile);
    out.push_back({K, r.summary.best_grad_norm});
  }
  return out;
}

}  // namespace metagrad
