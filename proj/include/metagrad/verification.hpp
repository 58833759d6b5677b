#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metagrad/optimizer.hpp"
#include "metagrad/rng.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

// One measured-vs-bound check. For lower bounds `measured` is the shortfall
// below the bound and `bound` is 0.
struct BoundAudit {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  double mc_margin = 0.0;
  int samples = 1;
  double standard_error = 0.0;
  bool passed = false;

  static BoundAudit make(std::string name, double measured, double bound, double mc_margin, int samples,
                         double standard_error = 0.0);
};

nlohmann::json to_json(const BoundAudit& audit);

inline constexpr int kMinAuditDraws = 10000;
inline constexpr double kAuditSeMultiplier = 4.0;
inline constexpr double kStepsizeSeMultiplier = 3.0;

// ||E[g~_i(w - alpha g~_i(w, D_in), D_o)] - grad f_i(w - alpha grad f_i(w))|| against
// alpha L sigma_tilde / sqrt(D_in). Draws come in antithetic pairs.
BoundAudit audit_bias(const TaskFamily& family, std::size_t task, const Vec& w, double alpha,
                      const SmoothnessProfile& profile, int D_in, int D_o, int n_mc, const RngStream& rng);

// E||g~_i(w - alpha g~_i(w, D_in), D_o)||^2 against
// (1 + 1/phi) ||grad f_i(w - alpha grad f_i(w))||^2 + (1 + phi) alpha^2 L^2 sigma_tilde^2 / D_in + sigma_tilde^2 / D_o.
BoundAudit audit_second_moment(const TaskFamily& family, std::size_t task, const Vec& w, double alpha,
                               const SmoothnessProfile& profile, int D_in, int D_o, double phi, int n_mc,
                               const RngStream& rng);

// ||grad F_hat - grad F|| against 2 alpha L sigma_tilde / sqrt(D_test) + alpha^2 L sigma_H sigma_tilde / D_test.
BoundAudit audit_grad_gap_F_hat(const TaskFamily& family, const Vec& w, double alpha, const SmoothnessProfile& profile,
                                int D_test, int n_mc, const RngStream& rng);

// E[beta_tilde] >= 0.8 / L(w) and E[beta_tilde^2] <= 3.125 / L(w)^2.
std::vector<BoundAudit> audit_stepsize_moments(const TaskFamily& family, const Vec& w, double alpha,
                                               const SmoothnessProfile& profile, int B_prime, int D_beta, int n_samples,
                                               const RngStream& rng);

// Worst ratio ||grad F(w) - grad F(u)|| / (min{L(w), L(u)} ||w - u||) over random
// pairs in the profile's ball; passes when <= 1.
BoundAudit audit_smoothness(const TaskFamily& family, double alpha, const SmoothnessProfile& profile, int n_pairs,
                            const RngStream& rng);

// Worst ratio ||FD-HVP - H v|| / (rho delta ||v||^2) over random noise-free probes
// with w and w +- delta v inside the profile's ball; passes when <= 1.
BoundAudit audit_hvp_error(const TaskFamily& family, const SmoothnessProfile& profile, int n_probes,
                           const RngStream& rng);

struct KShotFloor {
  int K = 0;
  double floor = 0.0;
};

// MAML with D_in = K for each K; floor is the best-iterate exact ||grad F||.
std::vector<KShotFloor> audit_kshot_floor(const TaskFamily& family, const std::vector<int>& K_list,
                                          const OptimizerConfig& config);

}  // namespace metagrad
