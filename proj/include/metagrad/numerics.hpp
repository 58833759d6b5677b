#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace metagrad {

// Dense real vector.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  Vec(std::initializer_list<double> values) : data_(values) {}
  explicit Vec(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t dim() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  Vec& operator+=(const Vec& other);
  Vec& operator-=(const Vec& other);
  Vec& operator*=(double s);

  bool operator==(const Vec&) const = default;

 private:
  std::vector<double> data_;
};

Vec operator+(Vec a, const Vec& b);
Vec operator-(Vec a, const Vec& b);
Vec operator-(Vec a);
Vec operator*(double s, Vec a);

double dot(const Vec& a, const Vec& b);
double norm(const Vec& v);
double squared_norm(const Vec& v);
// a + s * b
Vec axpy(const Vec& a, double s, const Vec& b);
bool all_finite(const Vec& v);

// Square dense matrix, row-major.
class Mat {
 public:
  Mat() = default;
  explicit Mat(std::size_t dim, double fill = 0.0) : dim_(dim), data_(dim * dim, fill) {}
  // Row-major entries; size must be a perfect square.
  static Mat from_row_major(std::vector<double> entries);
  static Mat identity(std::size_t dim);
  static Mat diagonal(const Vec& diag);
  static Mat outer(const Vec& a, const Vec& b);

  std::size_t dim() const { return dim_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }
  const std::vector<double>& row_major() const { return data_; }

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);

  bool operator==(const Mat&) const = default;

  Mat transpose() const;
  // Max absolute entry of (M - M^T).
  double asymmetry() const;
  bool is_symmetric(double tol = 1e-12) const { return asymmetry() <= tol; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(double s, Mat a);

Vec matvec(const Mat& m, const Vec& v);
Mat matmul(const Mat& a, const Mat& b);
double frobenius_norm(const Mat& m);
bool all_finite(const Mat& m);

struct SpectralNormOptions {
  double tol = 1e-10;
  int max_iters = 10000;
};

// ||m||_2 for symmetric m, by power iteration on m*m from a fixed start vector.
// Throws std::invalid_argument when m is not symmetric and IllConditioned when
// the iteration cap is reached.
double spectral_norm(const Mat& m, SpectralNormOptions options = {});

// All eigenvalues of a symmetric matrix (ascending), cyclic Jacobi sweeps.
std::vector<double> symmetric_eigenvalues(const Mat& m, double tol = 1e-14, int max_sweeps = 100);

// Solves m x = rhs for symmetric positive definite m via Cholesky.
// Throws IllConditioned when m is not numerically positive definite.
Vec solve_spd(const Mat& m, const Vec& rhs);

}  // namespace metagrad
