#include "metagrad/stochastic_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metagrad/error.hpp"

namespace metagrad {

namespace {

void require_positive_batch(int D, const char* what) {
  if (D < 1) throw std::invalid_argument(std::string(what) + ": batch size " + std::to_string(D) + " < 1");
}

}  // namespace

void validate(const BatchSpec& spec) {
  const std::pair<const char*, int> fields[] = {
      {"B", spec.B},       {"B_prime", spec.B_prime}, {"D_in", spec.D_in},     {"D_o", spec.D_o},
      {"D_h", spec.D_h},   {"D_beta", spec.D_beta},   {"D_test", spec.D_test},
  };
  for (const auto& [name, value] : fields) {
    if (value < 1) throw ConfigError(std::string(name) + "=" + std::to_string(value) + " < 1");
  }
}

Vec add_gradient_noise(Vec exact, int D, double sigma_tilde, const RngStream& rng) {
  require_positive_batch(D, "noisy_grad");
  if (sigma_tilde == 0.0) return exact;
  const double stddev = sigma_tilde / std::sqrt(static_cast<double>(exact.dim()) * D);
  exact += gaussian(rng, exact.dim(), stddev);
  return exact;
}

Vec noisy_grad(const TaskOracle& task, const Vec& w, int D, double sigma_tilde, const RngStream& rng) {
  require_positive_batch(D, "noisy_grad");
  return add_gradient_noise(task.gradient(w), D, sigma_tilde, rng);
}

Mat noisy_hess(const TaskOracle& task, const Vec& w, int D, double sigma_H, const RngStream& rng) {
  require_positive_batch(D, "noisy_hess");
  Mat h = task.hessian(w);
  if (sigma_H == 0.0) return h;
  const std::size_t d = h.dim();
  // S = (G + G^T)/2 with G i.i.d. N(0,1) has E||S||_F^2 = d(d+1)/2.
  const double scale = sigma_H / std::sqrt(static_cast<double>(D) * 0.5 * static_cast<double>(d * (d + 1)));
  const Vec g = gaussian(rng, d * d, 1.0);
  for (std::size_t r = 0; r < d; ++r) {
    h(r, r) += scale * g[r * d + r];
    for (std::size_t c = r + 1; c < d; ++c) {
      const double e = scale * 0.5 * (g[r * d + c] + g[c * d + r]);
      h(r, c) += e;
      h(c, r) += e;
    }
  }
  return h;
}

std::vector<std::size_t> sample_task_batch(const TaskFamily& family, int n, const RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_task_batch: n < 1");
  std::vector<double> cdf(family.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    acc += family.weight(i);
    cdf[i] = acc;
  }
  std::vector<std::size_t> out(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double u = rng.uniform(j) * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    out[j] = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), family.size() - 1);
  }
  return out;
}

}  // namespace metagrad
