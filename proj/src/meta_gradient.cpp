#include "metagrad/meta_gradient.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "metagrad/error.hpp"

namespace metagrad {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kMAML:
      return "maml";
    case Algorithm::kFOMAML:
      return "fomaml";
    case Algorithm::kHFMAML:
      return "hfmaml";
  }
  return "maml";
}

Algorithm algorithm_from_string(const std::string& name) {
  std::string key;
  for (char ch : name) {
    if (ch != '-' && ch != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (key == "maml") return Algorithm::kMAML;
  if (key == "fomaml") return Algorithm::kFOMAML;
  if (key == "hfmaml") return Algorithm::kHFMAML;
  throw ConfigError("unknown algorithm '" + name + "' (expected maml, fomaml or hfmaml)");
}

Vec inner_step(const TaskOracle& task, const Vec& w, double alpha, int D_in, double sigma_tilde,
               const RngStream& rng) {
  return axpy(w, -alpha, noisy_grad(task, w, D_in, sigma_tilde, rng));
}

namespace {

Vec outer_gradient(const TaskOracle& task, const Vec& w, double alpha, const NoiseModel& noise,
                   const BatchSpec& spec, const RngStream& rng) {
  const Vec adapted = inner_step(task, w, alpha, spec.D_in, noise.sigma_tilde, rng.derive(Purpose::kInner));
  return noisy_grad(task, adapted, spec.D_o, noise.sigma_tilde, rng.derive(Purpose::kOuter));
}

}  // namespace

Vec maml_direction(const TaskOracle& task, const Vec& w, double alpha, const NoiseModel& noise,
                   const BatchSpec& spec, const RngStream& rng) {
  const Vec v = outer_gradient(task, w, alpha, noise, spec, rng);
  const Mat h = noisy_hess(task, w, spec.D_h, noise.sigma_H, rng.derive(Purpose::kHessian));
  return axpy(v, -alpha, matvec(h, v));
}

Vec fomaml_direction(const TaskOracle& task, const Vec& w, double alpha, const NoiseModel& noise,
                     const BatchSpec& spec, const RngStream& rng) {
  return outer_gradient(task, w, alpha, noise, spec, rng);
}

Vec hvp_finite_diff(const TaskOracle& task, const Vec& w, const Vec& v, double delta, int D_h,
                    double sigma_tilde, const RngStream& rng) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("hvp_finite_diff: delta must be finite and positive");
  }
  const Vec plus = add_gradient_noise(task.gradient(axpy(w, delta, v)), D_h, sigma_tilde, rng);
  const Vec minus = add_gradient_noise(task.gradient(axpy(w, -delta, v)), D_h, sigma_tilde, rng);
  return (1.0 / (2.0 * delta)) * (plus - minus);
}

double hf_delta(double rho, double alpha, double probe_norm, const Vec& w) {
  if (rho > 0.0 && alpha > 0.0 && probe_norm > kNullProbeNorm) return 1.0 / (6.0 * rho * alpha * probe_norm);
  return 1e-3 * (1.0 + norm(w));
}

Vec hfmaml_direction(const TaskOracle& task, const Vec& w, double alpha, double rho,
                     const NoiseModel& noise, const BatchSpec& spec, const RngStream& rng,
                     std::optional<double> fixed_delta, HvpProbe* probe) {
  if (!(alpha > 0.0)) throw std::invalid_argument("hfmaml_direction: alpha must be positive");
  if (!(rho >= 0.0)) throw std::invalid_argument("hfmaml_direction: rho must be non-negative");
  Vec v = outer_gradient(task, w, alpha, noise, spec, rng);
  const double vn = norm(v);
  if (vn <= kNullProbeNorm) {
    if (probe) *probe = HvpProbe{v, fixed_delta.value_or(hf_delta(rho, alpha, vn, w)), Vec(w.dim())};
    return v;
  }
  const double delta = fixed_delta.value_or(hf_delta(rho, alpha, vn, w));
  Vec d = hvp_finite_diff(task, w, v, delta, spec.D_h, noise.sigma_tilde, rng.derive(Purpose::kHessian));
  Vec out = axpy(v, -alpha, d);
  if (probe) *probe = HvpProbe{std::move(v), delta, std::move(d)};
  return out;
}

Vec task_direction(Algorithm algorithm, const TaskOracle& task, const Vec& w, double alpha, double rho,
                   const NoiseModel& noise, const BatchSpec& spec, const RngStream& rng,
                   std::optional<double> fixed_delta) {
  switch (algorithm) {
    case Algorithm::kMAML:
      return maml_direction(task, w, alpha, noise, spec, rng);
    case Algorithm::kFOMAML:
      return fomaml_direction(task, w, alpha, noise, spec, rng);
    case Algorithm::kHFMAML:
      return hfmaml_direction(task, w, alpha, rho, noise, spec, rng, fixed_delta);
  }
  throw std::logic_error("task_direction: unknown algorithm");
}

double exact_F(const TaskFamily& family, const Vec& w, double alpha) {
  double acc = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const TaskOracle& t = family.task(i);
    acc += family.weight(i) * t.value(axpy(w, -alpha, t.gradient(w)));
  }
  return acc;
}

Vec exact_grad_F(const TaskFamily& family, const Vec& w, double alpha) {
  Vec acc(family.dim());
  for (std::size_t i = 0; i < family.size(); ++i) {
    const TaskOracle& t = family.task(i);
    const Vec outer = t.gradient(axpy(w, -alpha, t.gradient(w)));
    acc += family.weight(i) * axpy(outer, -alpha, t.hessian_vector(w, outer));
  }
  return acc;
}

void VecMoments::add(const Vec& x) {
  for (std::size_t j = 0; j < x.dim(); ++j) {
    sum_[j] += x[j];
    sum_sq_[j] += x[j] * x[j];
  }
  ++count_;
}

Vec VecMoments::mean() const {
  if (count_ == 0) return sum_;
  return (1.0 / count_) * sum_;
}

double VecMoments::standard_error() const {
  if (count_ < 2) return 0.0;
  const double n = count_;
  double total_var = 0.0;
  for (std::size_t j = 0; j < sum_.dim(); ++j) {
    const double m = sum_[j] / n;
    total_var += std::max(0.0, (sum_sq_[j] - n * m * m) / (n - 1.0));
  }
  return std::sqrt(total_var / n);
}

McEstimate mc_grad_F_hat(const TaskFamily& family, const Vec& w, double alpha, const NoiseModel& noise,
                         int D_test, int n_mc, const RngStream& rng) {
  if (n_mc < 1) throw std::invalid_argument("mc_grad_F_hat: n_mc < 1");
  if (D_test < 1) throw std::invalid_argument("mc_grad_F_hat: D_test < 1");
  VecMoments moments(family.dim());
  for (int s = 0; s < n_mc; ++s) {
    const RngStream draw = rng.derive(static_cast<std::uint64_t>(s));
    Vec sample(family.dim());
    for (std::size_t i = 0; i < family.size(); ++i) {
      const TaskOracle& t = family.task(i);
      const RngStream task_rng = draw.derive(i);
      const Vec g = noisy_grad(t, w, D_test, noise.sigma_tilde, task_rng.derive(Purpose::kInner));
      const Vec outer = t.gradient(axpy(w, -alpha, g));
      const Mat h = noisy_hess(t, w, D_test, noise.sigma_H, task_rng.derive(Purpose::kHessian));
      sample += family.weight(i) * axpy(outer, -alpha, matvec(h, outer));
    }
    moments.add(sample);
  }
  return McEstimate{moments.mean(), moments.standard_error(), n_mc};
}

}  // namespace metagrad
