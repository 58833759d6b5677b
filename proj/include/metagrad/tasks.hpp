#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "metagrad/numerics.hpp"
#include "metagrad/rng.hpp"

namespace metagrad {

// A twice-differentiable task loss with exact derivative oracles.
class TaskOracle {
 public:
  virtual ~TaskOracle() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(const Vec& w) const = 0;
  virtual Vec gradient(const Vec& w) const = 0;
  virtual Mat hessian(const Vec& w) const = 0;
  // H(w) v; tasks with cheap structure override this.
  virtual Vec hessian_vector(const Vec& w, const Vec& v) const { return matvec(hessian(w), v); }
};

// f(w) = 1/2 w^T A w + b^T w + c with A symmetric positive definite.
class QuadraticTask final : public TaskOracle {
 public:
  QuadraticTask(Mat a, Vec b, double c);

  std::size_t dim() const override { return b_.dim(); }
  double value(const Vec& w) const override;
  Vec gradient(const Vec& w) const override;
  Mat hessian(const Vec&) const override { return a_; }
  Vec hessian_vector(const Vec&, const Vec& v) const override { return matvec(a_, v); }

  const Mat& a() const { return a_; }
  const Vec& b() const { return b_; }
  double c() const { return c_; }

 private:
  Mat a_;
  Vec b_;
  double c_;
};

// f(x) = 1/4 ||x x^T - M||_F^2 with M = g g^T.
class MatrixFactorizationTask final : public TaskOracle {
 public:
  explicit MatrixFactorizationTask(Vec generator);

  std::size_t dim() const override { return g_.dim(); }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  Mat hessian(const Vec& x) const override;
  Vec hessian_vector(const Vec& x, const Vec& v) const override;

  const Vec& generator() const { return g_; }
  const Mat& target() const { return m_; }

 private:
  Vec g_;
  Mat m_;
};

enum class FamilyKind { kQuadratic, kRank1MF, kCustom };

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

// Finite task distribution: tasks with probabilities p_i.
class TaskFamily {
 public:
  using TaskPtr = std::shared_ptr<const TaskOracle>;

  // Uniform weights when `weights` is empty.
  TaskFamily(FamilyKind kind, std::vector<TaskPtr> tasks, std::vector<double> weights = {});

  static TaskFamily quadratic(std::vector<QuadraticTask> tasks, std::vector<double> weights = {});
  static TaskFamily rank1mf(std::vector<MatrixFactorizationTask> tasks, std::vector<double> weights = {});

  FamilyKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tasks_.size(); }
  const TaskOracle& task(std::size_t i) const { return *tasks_.at(i); }
  const std::vector<TaskPtr>& tasks() const { return tasks_; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_.at(i); }

  // Typed access; throws std::bad_cast when the family holds another kind.
  const QuadraticTask& quadratic_task(std::size_t i) const;
  const MatrixFactorizationTask& mf_task(std::size_t i) const;

  // sum_i p_i grad f_i(w)
  Vec mean_gradient(const Vec& w) const;

 private:
  FamilyKind kind_;
  std::size_t dim_ = 0;
  std::vector<TaskPtr> tasks_;
  std::vector<double> weights_;
};

// Constants of the smoothness and noise assumptions, localized to a ball.
struct SmoothnessProfile {
  double L = 0.0;
  double rho = 0.0;
  double sigma = 0.0;
  double sigma_tilde = 0.0;
  double sigma_H = 0.0;
  Vec center;
  double radius = 0.0;
};

struct NoiseModel {
  double sigma_tilde = 0.0;
  double sigma_H = 0.0;
};

inline constexpr int kSmoothnessSamples = 64;
inline constexpr double kSmoothnessInflation = 1.5;

// Conservative L, rho, sigma over the ball of `radius` around `center`:
// maxima over kSmoothnessSamples deterministic points (and nearby pairs for rho),
// inflated by kSmoothnessInflation. Quadratic families report L = max ||A_i||
// and rho = 0 exactly.
SmoothnessProfile local_smoothness(const TaskFamily& family, double radius, const Vec& center,
                                   NoiseModel noise = {});

// Uniform point in the ball of `radius` around `center`.
Vec sample_in_ball(const RngStream& rng, const Vec& center, double radius);

// --- generators -------------------------------------------------------------

struct QuadraticFamilyKnobs {
  std::size_t n_tasks = 10;
  std::size_t dim = 3;
  double eig_min = 0.5;
  double eig_max = 1.0;
  // Standard deviation of the entries of b_i.
  double b_scale = 1.0;
};

TaskFamily generate_quadratic_family(const QuadraticFamilyKnobs& knobs, const RngStream& rng);

// g_i ~ N(0, similarity^2 I) around `mean_generator` (zero when empty).
TaskFamily generate_mf_family(std::size_t n_tasks, std::size_t dim, double similarity,
                              const RngStream& rng, const Vec& mean_generator = {});

}  // namespace metagrad
