#pragma once

#include <cstddef>
#include <vector>

namespace conscale {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

Matrix mat_mul(const Matrix& a, const Matrix& b);
Vec mat_vec(const Matrix& a, const Vec& x);
Matrix transpose(const Matrix& a);
void add_scaled(Matrix& a, const Matrix& b, double scale);  // a += scale * b

// In-place lower Cholesky factorization (strict upper left untouched).
// Returns false if the matrix is not numerically positive definite.
bool cholesky_inplace(Matrix& a);

// Solve L L^T x = b given the lower factor.
void chol_solve_inplace(const Matrix& l, double* b);
// Solve L^T x = b alone (used to turn white noise into a draw with
// covariance (L L^T)^{-1}).
void chol_upper_solve_inplace(const Matrix& l, double* b);
Vec chol_solve(const Matrix& l, Vec b);
// Solve L L^T X = B for all columns of B at once (B overwritten, n x k).
void chol_solve_many(const Matrix& l, Matrix& b);
double chol_logdet(const Matrix& l);  // log det of the factored matrix
// A^{-1} from its lower Cholesky factor.
Matrix chol_inverse(const Matrix& l);
// In-place inverse of a lower-triangular matrix.
Matrix lower_triangular_inverse(const Matrix& l);
// Frobenius norm squared of L^{-1}; equals trace of (L L^T)^{-1}.
double chol_inverse_trace(const Matrix& l);

// Symmetric positive definite tridiagonal system, factored once and applied
// to one or many right-hand sides. No pivoting: intended for diagonally
// dominant systems.
class TridiagFactor {
 public:
  // diag has length n, off has length n-1 (sub- and super-diagonal).
  TridiagFactor(const Vec& diag, const Vec& off);
  std::size_t size() const { return d_.size(); }
  void solve_inplace(double* b) const;
  Vec solve(Vec b) const;
  // Solve for every column of the row-major matrix B (n x k) in place.
  void solve_rows(Matrix& b) const;

 private:
  Vec d_;   // modified pivots
  Vec w_;   // subdiagonal multipliers
  Vec off_; // original superdiagonal
};

double vec_dot(const Vec& a, const Vec& b);
double vec_mean(const Vec& a);
double vec_sd(const Vec& a);

}  // namespace conscale
