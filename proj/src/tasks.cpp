#include "metagrad/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <typeinfo>

#include "metagrad/error.hpp"

namespace metagrad {

namespace {

void require_dim(std::size_t expected, const Vec& w, const char* what) {
  if (w.dim() != expected) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(expected) +
                            ", got " + std::to_string(w.dim()));
  }
}

Vec random_unit(const RngStream& rng, std::size_t dim) {
  Vec u = gaussian(rng, dim, 1.0);
  double n = norm(u);
  if (n == 0.0) {
    u[0] = 1.0;
    n = 1.0;
  }
  return (1.0 / n) * u;
}

}  // namespace

QuadraticTask::QuadraticTask(Mat a, Vec b, double c) : a_(std::move(a)), b_(std::move(b)), c_(c) {
  if (a_.dim() != b_.dim()) {
    throw DimensionMismatch("QuadraticTask: A is " + std::to_string(a_.dim()) + "x" +
                            std::to_string(a_.dim()) + " but b has dimension " + std::to_string(b_.dim()));
  }
  if (!a_.is_symmetric()) throw std::invalid_argument("QuadraticTask: A is not symmetric");
  if (a_.dim() > 0 && symmetric_eigenvalues(a_).front() <= 0.0) {
    throw std::invalid_argument("QuadraticTask: A is not positive definite");
  }
}

double QuadraticTask::value(const Vec& w) const {
  require_dim(dim(), w, "QuadraticTask::value");
  return 0.5 * dot(w, matvec(a_, w)) + dot(b_, w) + c_;
}

Vec QuadraticTask::gradient(const Vec& w) const {
  require_dim(dim(), w, "QuadraticTask::gradient");
  return matvec(a_, w) + b_;
}

MatrixFactorizationTask::MatrixFactorizationTask(Vec generator)
    : g_(std::move(generator)), m_(Mat::outer(g_, g_)) {}

double MatrixFactorizationTask::value(const Vec& x) const {
  require_dim(dim(), x, "MatrixFactorizationTask::value");
  double acc = 0.0;
  for (std::size_t r = 0; r < dim(); ++r) {
    for (std::size_t c = 0; c < dim(); ++c) {
      const double e = x[r] * x[c] - m_(r, c);
      acc += e * e;
    }
  }
  return 0.25 * acc;
}

Vec MatrixFactorizationTask::gradient(const Vec& x) const {
  require_dim(dim(), x, "MatrixFactorizationTask::gradient");
  // (x x^T - M) x = ||x||^2 x - M x
  return axpy(squared_norm(x) * x, -1.0, matvec(m_, x));
}

Mat MatrixFactorizationTask::hessian(const Vec& x) const {
  require_dim(dim(), x, "MatrixFactorizationTask::hessian");
  // ||x||^2 I + 2 x x^T - M
  Mat h = 2.0 * Mat::outer(x, x);
  const double sq = squared_norm(x);
  for (std::size_t i = 0; i < dim(); ++i) h(i, i) += sq;
  h -= m_;
  return h;
}

Vec MatrixFactorizationTask::hessian_vector(const Vec& x, const Vec& v) const {
  require_dim(dim(), x, "MatrixFactorizationTask::hessian_vector");
  require_dim(dim(), v, "MatrixFactorizationTask::hessian_vector");
  Vec out = squared_norm(x) * v;
  out += (2.0 * dot(x, v)) * x;
  out -= matvec(m_, v);
  return out;
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kQuadratic:
      return "quadratic";
    case FamilyKind::kRank1MF:
      return "rank1mf";
    case FamilyKind::kCustom:
      return "custom";
  }
  return "custom";
}

FamilyKind family_kind_from_string(const std::string& name) {
  if (name == "quadratic") return FamilyKind::kQuadratic;
  if (name == "rank1mf") return FamilyKind::kRank1MF;
  throw ConfigError("unknown family kind '" + name + "' (expected quadratic or rank1mf)");
}

TaskFamily::TaskFamily(FamilyKind kind, std::vector<TaskPtr> tasks, std::vector<double> weights)
    : kind_(kind), tasks_(std::move(tasks)), weights_(std::move(weights)) {
  if (tasks_.empty()) throw std::invalid_argument("TaskFamily: no tasks");
  dim_ = tasks_.front()->dim();
  for (const auto& t : tasks_) {
    if (t->dim() != dim_) throw DimensionMismatch("TaskFamily: tasks disagree on dimension");
  }
  if (weights_.empty()) weights_.assign(tasks_.size(), 1.0 / static_cast<double>(tasks_.size()));
  if (weights_.size() != tasks_.size()) {
    throw std::invalid_argument("TaskFamily: " + std::to_string(weights_.size()) + " weights for " +
                                std::to_string(tasks_.size()) + " tasks");
  }
  double total = 0.0;
  for (double p : weights_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("TaskFamily: negative or non-finite weight");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("TaskFamily: weights sum to " + std::to_string(total) + ", not 1");
  }
}

TaskFamily TaskFamily::quadratic(std::vector<QuadraticTask> tasks, std::vector<double> weights) {
  std::vector<TaskPtr> ptrs;
  ptrs.reserve(tasks.size());
  for (auto& t : tasks) ptrs.push_back(std::make_shared<const QuadraticTask>(std::move(t)));
  return TaskFamily(FamilyKind::kQuadratic, std::move(ptrs), std::move(weights));
}

TaskFamily TaskFamily::rank1mf(std::vector<MatrixFactorizationTask> tasks, std::vector<double> weights) {
  std::vector<TaskPtr> ptrs;
  ptrs.reserve(tasks.size());
  for (auto& t : tasks) ptrs.push_back(std::make_shared<const MatrixFactorizationTask>(std::move(t)));
  return TaskFamily(FamilyKind::kRank1MF, std::move(ptrs), std::move(weights));
}

const QuadraticTask& TaskFamily::quadratic_task(std::size_t i) const {
  return dynamic_cast<const QuadraticTask&>(task(i));
}

const MatrixFactorizationTask& TaskFamily::mf_task(std::size_t i) const {
  return dynamic_cast<const MatrixFactorizationTask&>(task(i));
}

Vec TaskFamily::mean_gradient(const Vec& w) const {
  Vec acc(dim_);
  for (std::size_t i = 0; i < size(); ++i) acc += weights_[i] * tasks_[i]->gradient(w);
  return acc;
}

Vec sample_in_ball(const RngStream& rng, const Vec& center, double radius) {
  const std::size_t d = center.dim();
  const Vec u = random_unit(rng.derive(0), d);
  const double r = radius * std::pow(rng.uniform(1ULL << 40), 1.0 / static_cast<double>(d));
  return axpy(center, r, u);
}

SmoothnessProfile local_smoothness(const TaskFamily& family, double radius, const Vec& center,
                                   NoiseModel noise) {
  if (!(radius > 0.0)) throw std::invalid_argument("local_smoothness: radius must be positive");
  if (center.dim() != family.dim()) throw DimensionMismatch("local_smoothness: center dimension");

  // Center, half on the boundary sphere, half inside.
  const RngStream rng = RngStream(0x5EED5EEDULL).derive(Purpose::kSampling);
  std::vector<Vec> points;
  points.reserve(kSmoothnessSamples);
  points.push_back(center);
  for (int s = 1; s < kSmoothnessSamples; ++s) {
    const RngStream point_rng = rng.derive(static_cast<std::uint64_t>(s));
    if (s % 2 == 1) {
      points.push_back(axpy(center, radius, random_unit(point_rng, family.dim())));
    } else {
      points.push_back(sample_in_ball(point_rng, center, radius));
    }
  }

  SmoothnessProfile profile;
  profile.center = center;
  profile.radius = radius;
  profile.sigma_tilde = noise.sigma_tilde;
  profile.sigma_H = noise.sigma_H;

  double sigma = 0.0;
  for (const Vec& x : points) {
    std::vector<Vec> grads;
    grads.reserve(family.size());
    for (const auto& t : family.tasks()) grads.push_back(t->gradient(x));
    for (std::size_t i = 0; i < family.size(); ++i) {
      // grad f - grad f_i = sum_j p_j (grad f_j - grad f_i): exactly zero for identical tasks.
      Vec diff(family.dim());
      for (std::size_t j = 0; j < family.size(); ++j) diff += family.weight(j) * (grads[j] - grads[i]);
      sigma = std::max(sigma, norm(diff));
    }
  }

  if (family.kind() == FamilyKind::kQuadratic) {
    double l = 0.0;
    for (std::size_t i = 0; i < family.size(); ++i) {
      l = std::max(l, spectral_norm(family.quadratic_task(i).a()));
    }
    profile.L = l;
    profile.rho = 0.0;
    profile.sigma = kSmoothnessInflation * sigma;
    return profile;
  }

  double l = 0.0;
  double rho = 0.0;
  const double probe = 1e-3 * radius;
  for (std::size_t s = 0; s < points.size(); ++s) {
    const Vec& x = points[s];
    const Vec& y = points[(s + 1) % points.size()];
    // Nearby partner pulled toward the center so it stays in the ball.
    Vec toward = center - x;
    const double tn = norm(toward);
    const Vec near = tn > 0.0 ? axpy(x, probe / tn, toward)
                              : axpy(x, probe, random_unit(rng.derive(1000 + s), family.dim()));
    for (const auto& t : family.tasks()) {
      const Mat hx = t->hessian(x);
      l = std::max(l, spectral_norm(hx));
      const double dxy = norm(x - y);
      if (dxy > 0.0) rho = std::max(rho, spectral_norm(hx - t->hessian(y)) / dxy);
      const double dnear = norm(x - near);
      if (dnear > 0.0) rho = std::max(rho, spectral_norm(hx - t->hessian(near)) / dnear);
    }
  }
  profile.L = kSmoothnessInflation * l;
  profile.rho = kSmoothnessInflation * rho;
  profile.sigma = kSmoothnessInflation * sigma;
  return profile;
}

TaskFamily generate_quadratic_family(const QuadraticFamilyKnobs& knobs, const RngStream& rng) {
  if (knobs.n_tasks == 0 || knobs.dim == 0) throw ConfigError("quadratic family needs n_tasks, dim >= 1");
  if (!(knobs.eig_min > 0.0) || knobs.eig_max < knobs.eig_min) {
    throw ConfigError("quadratic family needs 0 < eig_min <= eig_max");
  }
  const std::size_t d = knobs.dim;
  std::vector<QuadraticTask> tasks;
  tasks.reserve(knobs.n_tasks);
  for (std::size_t i = 0; i < knobs.n_tasks; ++i) {
    const RngStream task_rng = rng.derive(i);
    // Random orthonormal basis by Gram-Schmidt.
    std::vector<Vec> basis;
    for (std::size_t k = 0; k < d; ++k) {
      Vec v = gaussian(task_rng.derive(100 + k), d, 1.0);
      for (const Vec& q : basis) v = axpy(v, -dot(v, q), q);
      v *= 1.0 / norm(v);
      basis.push_back(std::move(v));
    }
    Mat a(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double lambda = knobs.eig_min + (knobs.eig_max - knobs.eig_min) * task_rng.derive(200).uniform(k);
      a += lambda * Mat::outer(basis[k], basis[k]);
    }
    // Exact symmetry.
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = r + 1; c < d; ++c) {
        const double avg = 0.5 * (a(r, c) + a(c, r));
        a(r, c) = avg;
        a(c, r) = avg;
      }
    }
    Vec b = gaussian(task_rng.derive(300), d, knobs.b_scale);
    tasks.emplace_back(std::move(a), std::move(b), 0.0);
  }
  return TaskFamily::quadratic(std::move(tasks));
}

TaskFamily generate_mf_family(std::size_t n_tasks, std::size_t dim, double similarity,
                              const RngStream& rng, const Vec& mean_generator) {
  if (n_tasks == 0 || dim == 0) throw ConfigError("rank1mf family needs n_tasks, dim >= 1");
  if (!(similarity >= 0.0)) throw ConfigError("rank1mf family needs similarity >= 0");
  const Vec mean = mean_generator.dim() == 0 ? Vec(dim) : mean_generator;
  if (mean.dim() != dim) throw ConfigError("rank1mf mean generator has wrong dimension");
  std::vector<MatrixFactorizationTask> tasks;
  tasks.reserve(n_tasks);
  for (std::size_t i = 0; i < n_tasks; ++i) {
    tasks.emplace_back(mean + gaussian(rng.derive(i), dim, similarity));
  }
  return TaskFamily::rank1mf(std::move(tasks));
}

}  // namespace metagrad
