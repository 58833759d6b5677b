#include "metagrad/closed_form.hpp"

#include <stdexcept>
#include <string>

#include "metagrad/error.hpp"
#include "metagrad/meta_gradient.hpp"

namespace metagrad {

namespace {

void require_quadratic(const TaskFamily& family, double alpha) {
  if (family.kind() != FamilyKind::kQuadratic) {
    throw std::invalid_argument("closed form needs a quadratic family");
  }
  double L = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) L = std::max(L, spectral_norm(family.quadratic_task(i).a()));
  if (!(alpha >= 0.0) || alpha * L >= 1.0) {
    throw std::invalid_argument("closed form needs 0 <= alpha < 1/L (alpha L = " + std::to_string(alpha * L) + ")");
  }
}

// I - alpha A
Mat shrink(const Mat& a, double alpha) { return Mat::identity(a.dim()) - alpha * a; }

struct LinearSystem {
  Mat lhs;
  Vec rhs;
};

// sum_i p_i S_i^power A_i and sum_i p_i S_i^power b_i with S_i = I - alpha A_i.
LinearSystem weighted_system(const TaskFamily& family, double alpha, int power) {
  const std::size_t d = family.dim();
  LinearSystem sys{Mat(d), Vec(d)};
  for (std::size_t i = 0; i < family.size(); ++i) {
    const QuadraticTask& t = family.quadratic_task(i);
    const Mat s = shrink(t.a(), alpha);
    Mat factor = s;
    for (int k = 1; k < power; ++k) factor = matmul(factor, s);
    sys.lhs += family.weight(i) * matmul(factor, t.a());
    sys.rhs += family.weight(i) * matvec(factor, t.b());
  }
  // Products of commuting symmetric factors; remove round-off asymmetry.
  sys.lhs = 0.5 * (sys.lhs + sys.lhs.transpose());
  return sys;
}

// Cholesky solve with two rounds of iterative refinement.
Vec refined_solve(const Mat& m, const Vec& rhs) {
  Vec x = solve_spd(m, rhs);
  for (int round = 0; round < 2; ++round) {
    const Vec residual = rhs - matvec(m, x);
    x += solve_spd(m, residual);
  }
  return x;
}

}  // namespace

Vec solve_quadratic_maml(const TaskFamily& family, double alpha) {
  require_quadratic(family, alpha);
  const LinearSystem sys = weighted_system(family, alpha, 2);
  return -refined_solve(sys.lhs, sys.rhs);
}

Vec solve_quadratic_fo(const TaskFamily& family, double alpha) {
  require_quadratic(family, alpha);
  const LinearSystem sys = weighted_system(family, alpha, 1);
  return -refined_solve(sys.lhs, sys.rhs);
}

double fo_gap(const TaskFamily& family, double alpha) {
  return norm(exact_grad_F(family, solve_quadratic_fo(family, alpha), alpha));
}

QuadraticAnalysis analyze_quadratic(const TaskFamily& family, double alpha) {
  require_quadratic(family, alpha);
  QuadraticAnalysis out;
  const LinearSystem meta = weighted_system(family, alpha, 2);
  const LinearSystem fo = weighted_system(family, alpha, 1);
  out.w_star = -refined_solve(meta.lhs, meta.rhs);
  out.w_fo = -refined_solve(fo.lhs, fo.rhs);
  out.grad_F_at_wfo_norm = norm(exact_grad_F(family, out.w_fo, alpha));
  out.meta_matrix = meta.lhs;
  out.fo_matrix = fo.lhs;
  return out;
}

Vec fo_iteration_map(const TaskFamily& family, const Vec& w, double alpha, double beta) {
  Vec direction(family.dim());
  for (std::size_t i = 0; i < family.size(); ++i) {
    const TaskOracle& t = family.task(i);
    direction += family.weight(i) * t.gradient(axpy(w, -alpha, t.gradient(w)));
  }
  return axpy(w, -beta, direction);
}

}  // namespace metagrad
