#include "cgmcr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cgmcr/errors.hpp"

namespace cgmcr {

namespace {

std::string shape(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

void require_symmetric(const Mat& m, const char* op) {
  if (!m.square()) {
    throw DimensionError(std::string(op) + ": matrix is not square (" + shape(m) + ")");
  }
  if (!m.all_finite()) {
    throw NumericalError(std::string(op) + ": non-finite entry");
  }
  double max_abs = 0.0;
  for (double v : m.data()) max_abs = std::max(max_abs, std::abs(v));
  const double tol = 1e-10 * std::max(1.0, max_abs);
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > tol) {
        throw DimensionError(std::string(op) + ": matrix is not symmetric at (" +
                             std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

// Householder reduction to tridiagonal form. On return `d` holds the diagonal,
// `e` the subdiagonal in e[1..n-1], and `v` the accumulated orthogonal
// transform when `want_vectors` is set.
void tridiagonalize(Mat& v, std::vector<double>& d, std::vector<double>& e, bool want_vectors) {
  const std::size_t n = v.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  if (want_vectors) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      v(n - 1, i) = v(i, i);
      v(i, i) = 1.0;
      const double h = d[i + 1];
      if (h != 0.0) {
        for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
        for (std::size_t j = 0; j <= i; ++j) {
          double g = 0.0;
          for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
          for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
        }
      }
      for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
      d[j] = v(n - 1, j);
      v(n - 1, j) = 0.0;
    }
    v(n - 1, n - 1) = 1.0;
  } else {
    // Diagonal entries of the tridiagonal matrix sit on the diagonal of v.
    for (std::size_t i = 0; i + 1 < n; ++i) v(n - 1, i) = v(i, i);
    for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);
  }
  e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e). When `vt` is non-null its rows are
// the current basis vectors (i.e. the transpose of the accumulated transform)
// and are rotated along with the iteration.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, Mat* vt) {
  const std::size_t n = d.size();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 60) throw NumericalError("sym_eig: QL iteration did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if (vt != nullptr) {
            auto lo = vt->row(ii);
            auto hi = vt->row(ii + 1);
            for (std::size_t k = 0; k < n; ++k) {
              const double t = hi[k];
              hi[k] = s * lo[k] + c * t;
              lo[k] = c * lo[k] - s * t;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Mat: data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Mat: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diag(std::span<const double> values) {
  Mat m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

std::vector<double> Mat::col(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

bool Mat::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Mat& Mat::operator+=(const Mat& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ (" + shape(a) + " * " + shape(b) + ")");
  }
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    auto ai = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: row counts differ (" + shape(a) + "ᵀ * " + shape(b) + ")");
  }
  Mat c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ak = a.row(k);
    auto bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      auto ci = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: column counts differ (" + shape(a) + " * " + shape(b) + "ᵀ)");
  }
  Mat c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto bj = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

Mat hadamard(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "hadamard");
  Mat c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] *= bd[i];
  return c;
}

double frobenius_norm(const Mat& m) { return std::sqrt(dot(m, m)); }

double dot(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) s += ad[i] * bd[i];
  return s;
}

double trace(const Mat& m) {
  if (!m.square()) throw DimensionError("trace: matrix is not square (" + shape(m) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
  return s;
}

Mat scale_rows(Mat m, std::span<const double> s) {
  if (s.size() != m.rows()) throw DimensionError("scale_rows: length mismatch");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (double& v : m.row(i)) v *= s[i];
  }
  return m;
}

Mat scale_cols(Mat m, std::span<const double> s) {
  if (s.size() != m.cols()) throw DimensionError("scale_cols: length mismatch");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] *= s[j];
  }
  return m;
}

SymEig sym_eig(const Mat& m) {
  require_symmetric(m, "sym_eig");
  const std::size_t n = m.rows();
  if (n == 0) return {};

  Mat v = m;
  std::vector<double> d;
  std::vector<double> e;
  tridiagonalize(v, d, e, true);
  Mat vt = v.transpose();
  tridiagonal_ql(d, e, &vt);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

  SymEig out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Mat(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = d[order[j]];
    auto src = vt.row(order[j]);
    for (std::size_t k = 0; k < n; ++k) out.eigenvectors(k, j) = src[k];
  }
  return out;
}

std::vector<double> sym_eigvals(const Mat& m) {
  require_symmetric(m, "sym_eigvals");
  const std::size_t n = m.rows();
  if (n == 0) return {};
  Mat v = m;
  std::vector<double> d;
  std::vector<double> e;
  tridiagonalize(v, d, e, false);
  tridiagonal_ql(d, e, nullptr);
  std::sort(d.begin(), d.end());
  return d;
}

double logdet_ipsd(const Mat& m, double scale) {
  if (!(scale > 0.0)) throw ParameterError("logdet_ipsd: scale must be positive");
  double total = 0.0;
  for (double lambda : sym_eigvals(m)) {
    if (lambda < -1e-8) {
      throw NumericalError("logdet_ipsd: matrix is not PSD (eigenvalue " +
                           std::to_string(lambda) + ")");
    }
    total += std::log1p(scale * std::max(lambda, 0.0));
  }
  return total;
}

double logdet_ipsd_gram(const Mat& z, double scale) {
  return z.rows() <= z.cols() ? logdet_ipsd(matmul_nt(z, z), scale)
                              : logdet_ipsd(matmul_tn(z, z), scale);
}

Mat cholesky(const Mat& m) {
  require_symmetric(m, "cholesky");
  const std::size_t n = m.rows();
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) {
      throw NumericalError("cholesky: matrix is not positive definite (pivot " +
                           std::to_string(j) + ")");
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Mat solve_spd(const Mat& m, const Mat& b) {
  if (m.rows() != b.rows()) throw DimensionError("solve_spd: right-hand side has wrong row count");
  const Mat l = cholesky(m);
  const std::size_t n = m.rows();
  Mat x = b;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

Mat orthonormal_columns(const Mat& a) {
  if (a.cols() > a.rows()) throw DimensionError("orthonormal_columns: matrix is wide");
  // Modified Gram-Schmidt with one reorthogonalization pass.
  Mat q = a.transpose();  // rows are the working vectors
  for (std::size_t j = 0; j < q.rows(); ++j) {
    auto qj = q.row(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        auto qi = q.row(i);
        double proj = 0.0;
        for (std::size_t k = 0; k < qj.size(); ++k) proj += qi[k] * qj[k];
        for (std::size_t k = 0; k < qj.size(); ++k) qj[k] -= proj * qi[k];
      }
    }
    double norm = 0.0;
    for (double v : qj) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-12) throw NumericalError("orthonormal_columns: matrix is rank deficient");
    for (double& v : qj) v /= norm;
  }
  return q.transpose();
}

}  // namespace cgmcr
