#include "conscale/linalg.hpp"

#include <cmath>
#include <cstring>

#include "conscale/errors.hpp"
#include "conscale/kernels.hpp"

namespace conscale {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidInputError("mat_mul: shape mismatch");
  Matrix c(a.rows(), b.cols());
  kern::matmul(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Vec mat_vec(const Matrix& a, const Vec& x) {
  if (a.cols() != x.size()) throw InvalidInputError("mat_vec: shape mismatch");
  Vec y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    y[i] = kern::dot(a.row(i), x.data(), a.cols());
  return y;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void add_scaled(Matrix& a, const Matrix& b, double scale) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInputError("add_scaled: shape mismatch");
  kern::axpy(scale, b.data(), a.data(), a.rows() * a.cols());
}

bool cholesky_inplace(Matrix& a) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw InvalidInputError("cholesky: matrix not square");
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) - kern::dot(a.row(j), a.row(j), j);
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a(j, j) = d;
    const double inv = 1.0 / d;
    for (std::size_t i = j + 1; i < n; ++i)
      a(i, j) = (a(i, j) - kern::dot(a.row(i), a.row(j), j)) * inv;
  }
  return true;
}

void chol_solve_inplace(const Matrix& l, double* b) {
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i)
    b[i] = (b[i] - kern::dot(l.row(i), b, i)) / l(i, i);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= l(j, ii) * b[j];
    b[ii] = s / l(ii, ii);
  }
}

void chol_upper_solve_inplace(const Matrix& l, double* b) {
  const std::size_t n = l.rows();
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= l(j, ii) * b[j];
    b[ii] = s / l(ii, ii);
  }
}

Vec chol_solve(const Matrix& l, Vec b) {
  if (b.size() != l.rows()) throw InvalidInputError("chol_solve: size mismatch");
  chol_solve_inplace(l, b.data());
  return b;
}

void chol_solve_many(const Matrix& l, Matrix& b) {
  const std::size_t n = l.rows();
  if (b.rows() != n) throw InvalidInputError("chol_solve_many: size mismatch");
  const std::size_t k = b.cols();
  // forward substitution across whole rows of B
  for (std::size_t i = 0; i < n; ++i) {
    double* bi = b.row(i);
    for (std::size_t j = 0; j < i; ++j) kern::axpy(-l(i, j), b.row(j), bi, k);
    const double inv = 1.0 / l(i, i);
    for (std::size_t c = 0; c < k; ++c) bi[c] *= inv;
  }
  // back substitution with the transposed factor
  for (std::size_t ii = n; ii-- > 0;) {
    double* bi = b.row(ii);
    for (std::size_t j = ii + 1; j < n; ++j) kern::axpy(-l(j, ii), b.row(j), bi, k);
    const double inv = 1.0 / l(ii, ii);
    for (std::size_t c = 0; c < k; ++c) bi[c] *= inv;
  }
}

double chol_logdet(const Matrix& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Matrix lower_triangular_inverse(const Matrix& l) {
  const std::size_t n = l.rows();
  Matrix inv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    inv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t p = j; p < i; ++p) s += l(i, p) * inv(p, j);
      inv(i, j) = -s / l(i, i);
    }
  }
  return inv;
}

Matrix chol_inverse(const Matrix& l) {
  const std::size_t n = l.rows();
  Matrix linv = lower_triangular_inverse(l);
  // A^{-1} = L^{-T} L^{-1}; exploit lower-triangular structure of L^{-1}.
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = j; p < n; ++p) s += linv(p, i) * linv(p, j);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

double chol_inverse_trace(const Matrix& l) {
  Matrix linv = lower_triangular_inverse(l);
  double s = 0.0;
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i)
    s += kern::dot(linv.row(i), linv.row(i), i + 1);
  return s;
}

TridiagFactor::TridiagFactor(const Vec& diag, const Vec& off)
    : d_(diag), w_(off.size()), off_(off) {
  const std::size_t n = d_.size();
  if (off.size() + 1 != n)
    throw InvalidInputError("TridiagFactor: band length mismatch");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(d_[i - 1] > 0.0)) throw NumericError("TridiagFactor: not PD");
    w_[i - 1] = off_[i - 1] / d_[i - 1];
    d_[i] -= w_[i - 1] * off_[i - 1];
  }
  if (!d_.empty() && !(d_.back() > 0.0))
    throw NumericError("TridiagFactor: not PD");
}

void TridiagFactor::solve_inplace(double* b) const {
  const std::size_t n = d_.size();
  for (std::size_t i = 1; i < n; ++i) b[i] -= w_[i - 1] * b[i - 1];
  b[n - 1] /= d_[n - 1];
  for (std::size_t ii = n - 1; ii-- > 0;)
    b[ii] = (b[ii] - off_[ii] * b[ii + 1]) / d_[ii];
}

Vec TridiagFactor::solve(Vec b) const {
  solve_inplace(b.data());
  return b;
}

void TridiagFactor::solve_rows(Matrix& b) const {
  const std::size_t n = d_.size();
  if (b.rows() != n) throw InvalidInputError("TridiagFactor: size mismatch");
  const std::size_t k = b.cols();
  for (std::size_t i = 1; i < n; ++i)
    kern::axpy(-w_[i - 1], b.row(i - 1), b.row(i), k);
  {
    const double inv = 1.0 / d_[n - 1];
    double* r = b.row(n - 1);
    for (std::size_t c = 0; c < k; ++c) r[c] *= inv;
  }
  for (std::size_t ii = n - 1; ii-- > 0;) {
    double* r = b.row(ii);
    kern::axpy(-off_[ii], b.row(ii + 1), r, k);
    const double inv = 1.0 / d_[ii];
    for (std::size_t c = 0; c < k; ++c) r[c] *= inv;
  }
}

double vec_dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw InvalidInputError("vec_dot: size mismatch");
  return kern::dot(a.data(), b.data(), a.size());
}

double vec_mean(const Vec& a) {
  if (a.empty()) throw InvalidInputError("vec_mean: empty");
  return kern::sum(a.data(), a.size()) / (double)a.size();
}

double vec_sd(const Vec& a) {
  const double m = vec_mean(a);
  double s = 0.0;
  for (double v : a) s += (v - m) * (v - m);
  return std::sqrt(s / (double)(a.size() > 1 ? a.size() - 1 : 1));
}

}  // namespace conscale
