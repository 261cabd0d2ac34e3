#pragma once

// Dense row-major matrices and the symmetric factorizations used by the
// coding-rate and graph-cut objectives. Everything is double precision.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace cgmcr {

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat diag(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::vector<double> col(std::size_t c) const;

  Mat transpose() const;
  bool all_finite() const;

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);

/// a * b
Mat matmul(const Mat& a, const Mat& b);
/// aᵀ * b
Mat matmul_tn(const Mat& a, const Mat& b);
/// a * bᵀ
Mat matmul_nt(const Mat& a, const Mat& b);

/// a ⊙ b
Mat hadamard(const Mat& a, const Mat& b);
double frobenius_norm(const Mat& m);
double dot(const Mat& a, const Mat& b);
double trace(const Mat& m);

/// Scales row i by s[i].
Mat scale_rows(Mat m, std::span<const double> s);
/// Scales column j by s[j].
Mat scale_cols(Mat m, std::span<const double> s);

struct SymEig {
  std::vector<double> eigenvalues;  // ascending
  Mat eigenvectors;                 // column j pairs with eigenvalues[j]
};

/// Symmetric eigendecomposition via Householder tridiagonalization and
/// implicit QL. Throws DimensionError for non-square or asymmetric input
/// (tolerance 1e-10, relative to the largest entry when that exceeds 1).
SymEig sym_eig(const Mat& m);

/// Eigenvalues only, ascending. Same reduction without vector accumulation.
std::vector<double> sym_eigvals(const Mat& m);

/// log det(I + scale * m) for symmetric PSD m. Throws NumericalError if an
/// eigenvalue is below -1e-8.
double logdet_ipsd(const Mat& m, double scale);

/// log det(I + scale * z zᵀ), evaluated on whichever Gram side of z is smaller.
double logdet_ipsd_gram(const Mat& z, double scale);

/// Lower Cholesky factor of an SPD matrix. Throws NumericalError on failure.
Mat cholesky(const Mat& m);

/// Solves m * x = b for SPD m.
Mat solve_spd(const Mat& m, const Mat& b);

/// Orthonormal basis of the column space of a tall full-rank matrix (thin Q
/// of a QR factorization with positive diag(R)).
Mat orthonormal_columns(const Mat& a);

}  // namespace cgmcr
