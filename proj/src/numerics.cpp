#include "metagrad/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "metagrad/error.hpp"

namespace metagrad {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

}  // namespace

Vec& Vec::operator+=(const Vec& other) {
  require_same_dim(dim(), other.dim(), "vector add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vec& Vec::operator-=(const Vec& other) {
  require_same_dim(dim(), other.dim(), "vector subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vec& Vec::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Vec operator+(Vec a, const Vec& b) { return a += b; }
Vec operator-(Vec a, const Vec& b) { return a -= b; }
Vec operator-(Vec a) { return a *= -1.0; }
Vec operator*(double s, Vec a) { return a *= s; }

double dot(const Vec& a, const Vec& b) {
  require_same_dim(a.dim(), b.dim(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(const Vec& v) { return dot(v, v); }

double norm(const Vec& v) {
  // Scaled to avoid overflow for large entries.
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double acc = 0.0;
  for (double x : v) {
    const double r = x / scale;
    acc += r * r;
  }
  return scale * std::sqrt(acc);
}

Vec axpy(const Vec& a, double s, const Vec& b) {
  require_same_dim(a.dim(), b.dim(), "axpy");
  Vec out = a;
  for (std::size_t i = 0; i < out.dim(); ++i) out[i] += s * b[i];
  return out;
}

bool all_finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Mat Mat::from_row_major(std::vector<double> entries) {
  const auto dim = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(entries.size()))));
  if (dim * dim != entries.size()) {
    throw DimensionMismatch("matrix entries: " + std::to_string(entries.size()) +
                            " is not a perfect square");
  }
  Mat m;
  m.dim_ = dim;
  m.data_ = std::move(entries);
  return m;
}

Mat Mat::identity(std::size_t dim) {
  Mat m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diagonal(const Vec& diag) {
  Mat m(diag.dim());
  for (std::size_t i = 0; i < diag.dim(); ++i) m(i, i) = diag[i];
  return m;
}

Mat Mat::outer(const Vec& a, const Vec& b) {
  require_same_dim(a.dim(), b.dim(), "outer product");
  Mat m(a.dim());
  for (std::size_t r = 0; r < a.dim(); ++r) {
    for (std::size_t c = 0; c < b.dim(); ++c) m(r, c) = a[r] * b[c];
  }
  return m;
}

Mat& Mat::operator+=(const Mat& other) {
  require_same_dim(dim_, other.dim_, "matrix add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& other) {
  require_same_dim(dim_, other.dim_, "matrix subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Mat Mat::transpose() const {
  Mat t(dim_);
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = 0; c < dim_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

double Mat::asymmetry() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = r + 1; c < dim_; ++c) {
      worst = std::max(worst, std::abs((*this)(r, c) - (*this)(c, r)));
    }
  }
  return worst;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(double s, Mat a) { return a *= s; }

Vec matvec(const Mat& m, const Vec& v) {
  require_same_dim(m.dim(), v.dim(), "matvec");
  Vec out(m.dim());
  for (std::size_t r = 0; r < m.dim(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m.dim(); ++c) acc += m(r, c) * v[c];
    out[r] = acc;
  }
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  require_same_dim(a.dim(), b.dim(), "matmul");
  const std::size_t n = a.dim();
  Mat out(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      const double ark = a(r, k);
      for (std::size_t c = 0; c < n; ++c) out(r, c) += ark * b(k, c);
    }
  }
  return out;
}

double frobenius_norm(const Mat& m) {
  double acc = 0.0;
  for (double x : m.row_major()) acc += x * x;
  return std::sqrt(acc);
}

bool all_finite(const Mat& m) {
  return std::all_of(m.row_major().begin(), m.row_major().end(),
                     [](double x) { return std::isfinite(x); });
}

double spectral_norm(const Mat& m, SpectralNormOptions options) {
  if (!m.is_symmetric()) {
    throw std::invalid_argument("spectral_norm: matrix is not symmetric (asymmetry " +
                                std::to_string(m.asymmetry()) + ")");
  }
  const std::size_t n = m.dim();
  if (n == 0 || frobenius_norm(m) == 0.0) return 0.0;

  // Irregular deterministic start so it is not orthogonal to the top eigenspace of
  // structured matrices.
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = 1.0 + 0.5 * std::sin(1.0 + 2.3 * static_cast<double>(i));
  }
  x *= 1.0 / norm(x);

  // Power iteration on m*m converges to the span of the eigenvectors of +-lambda_max, which can
  // be nearly degenerate for indefinite m. A 2x2 Ritz step on span{x, m x} resolves that pair.
  const auto ritz = [&m](const Vec& q) {
    const Vec mq = matvec(m, q);
    const double a = dot(q, mq);
    const Vec r = axpy(mq, -a, q);
    const double b = norm(r);
    if (b <= 1e-300) return std::abs(a);
    const double c = dot(r, matvec(m, r)) / (b * b);
    const double mid = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    return std::max(std::abs(mid + rad), std::abs(mid - rad));
  };

  const Mat sq = matmul(m, m);
  double estimate = ritz(x);
  for (int it = 0; it < options.max_iters; ++it) {
    Vec y = matvec(sq, x);
    const double ny = norm(y);
    if (ny == 0.0) return 0.0;
    y *= 1.0 / ny;
    x = std::move(y);
    const double next = ritz(x);
    if (std::abs(next - estimate) <= options.tol * next) return next;
    estimate = next;
  }
  throw IllConditioned("spectral_norm: power iteration did not converge in " +
                       std::to_string(options.max_iters) + " iterations");
}

std::vector<double> symmetric_eigenvalues(const Mat& m, double tol, int max_sweeps) {
  if (!m.is_symmetric()) {
    throw std::invalid_argument("symmetric_eigenvalues: matrix is not symmetric");
  }
  const std::size_t n = m.dim();
  Mat a = m;
  const double scale = std::max(frobenius_norm(m), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(off) <= tol * scale) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

Vec solve_spd(const Mat& m, const Vec& rhs) {
  require_same_dim(m.dim(), rhs.dim(), "solve_spd");
  const std::size_t n = m.dim();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(m(i, i)));

  Mat l(n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 1e-14 * max_diag)) {
      throw IllConditioned("solve_spd: matrix is not positive definite (pivot " +
                           std::to_string(diag) + " at row " + std::to_string(j) + ")");
    }
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = m(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / l(j, j);
    }
  }

  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = rhs[i];
    for (std::size_t k = 0; k < i; ++k) acc -= l(i, k) * y[k];
    y[i] = acc / l(i, i);
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = y[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= l(k, i) * x[k];
    x[i] = acc / l(i, i);
  }
  return x;
}

}  // namespace metagrad
