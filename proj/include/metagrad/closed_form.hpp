#pragma once

#include "metagrad/numerics.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

// Fixed points of MAML and FO-MAML on a quadratic family with exact oracles.
struct QuadraticAnalysis {
  Vec w_star;
  Vec w_fo;
  double grad_F_at_wfo_norm = 0.0;
  // sum_i p_i (I - alpha A_i)^2 A_i
  Mat meta_matrix;
  // sum_i p_i (I - alpha A_i) A_i
  Mat fo_matrix;
};

// All of these require a quadratic family and alpha < 1 / max_i ||A_i||
// (std::invalid_argument otherwise); a singular system throws IllConditioned.

// w* = -[sum p_i (I - alpha A_i)^2 A_i]^{-1} [sum p_i (I - alpha A_i)^2 b_i]
Vec solve_quadratic_maml(const TaskFamily& family, double alpha);

// w_FO = -[sum p_i (I - alpha A_i) A_i]^{-1} [sum p_i (I - alpha A_i) b_i]
Vec solve_quadratic_fo(const TaskFamily& family, double alpha);

// ||grad F(w_FO)||, the floor exact-oracle FO-MAML stalls at.
double fo_gap(const TaskFamily& family, double alpha);

QuadraticAnalysis analyze_quadratic(const TaskFamily& family, double alpha);

// One exact-oracle full-batch FO-MAML step with stepsize beta.
Vec fo_iteration_map(const TaskFamily& family, const Vec& w, double alpha, double beta);

}  // namespace metagrad
