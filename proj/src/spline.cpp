#include "conscale/spline.hpp"

#include <algorithm>
#include <cmath>

#include "conscale/errors.hpp"
#include "conscale/kernels.hpp"

namespace conscale {

namespace {

void check_finite_increasing(const Vec& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]))
      throw InvalidInputError(std::string(what) + ": non-finite entry");
    if (i > 0 && !(v[i] > v[i - 1]))
      throw InvalidInputError(std::string(what) + ": not strictly increasing");
  }
}

// R is the (n-2)x(n-2) tridiagonal Gram matrix of the second-derivative
// basis: diag (h[i] + h[i+1]) / 3, off-diagonal h[i+1] / 6.
TridiagFactor factor_r(const Vec& h) {
  const std::size_t m = h.size() - 1;  // n - 2
  Vec diag(m), off(m > 0 ? m - 1 : 0);
  for (std::size_t i = 0; i < m; ++i) diag[i] = (h[i] + h[i + 1]) / 3.0;
  for (std::size_t i = 0; i + 1 < m; ++i) off[i] = h[i + 1] / 6.0;
  return TridiagFactor(diag, off);
}

Vec knot_gaps(const KnotGrid& grid) {
  Vec h(grid.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) h[i] = grid[i + 1] - grid[i];
  return h;
}

}  // namespace

KnotGrid::KnotGrid(Vec knots) : knots_(std::move(knots)) {
  if (knots_.size() < 3)
    throw InvalidInputError("KnotGrid: at least 3 knots required");
  check_finite_increasing(knots_, "KnotGrid");
}

std::size_t KnotGrid::interval(double s) const {
  if (!(s >= knots_.front()) || !(s <= knots_.back()))
    throw InvalidInputError("KnotGrid: point outside knot span");
  auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
  std::size_t i = (std::size_t)(it - knots_.begin());
  if (i == 0) return 0;
  if (i >= knots_.size()) return knots_.size() - 2;
  return i - 1;
}

RoughnessMatrix::RoughnessMatrix(KnotGrid grid)
    : grid_(std::move(grid)),
      h_(knot_gaps(grid_)),
      r_(factor_r(h_)),
      k_(grid_.size(), grid_.size()) {
  const std::size_t n = grid_.size();
  const std::size_t m = n - 2;
  // X = R^{-1} Q^T, rows are the interior second-derivative functionals
  Matrix x(m, n);
  for (std::size_t j = 0; j < m; ++j) {
    x(j, j) = 1.0 / h_[j];
    x(j, j + 1) = -1.0 / h_[j] - 1.0 / h_[j + 1];
    x(j, j + 2) = 1.0 / h_[j + 1];
  }
  r_.solve_rows(x);
  // K = Q X: row i collects the (at most three) columns of Q touching it
  for (std::size_t i = 0; i < n; ++i) {
    double* ki = k_.row(i);
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min(i, m - 1);
    for (std::size_t j = lo; j <= hi && j < m; ++j) {
      double q;
      if (i == j)
        q = 1.0 / h_[j];
      else if (i == j + 1)
        q = -1.0 / h_[j] - 1.0 / h_[j + 1];
      else
        q = 1.0 / h_[j + 1];
      kern::axpy(q, x.row(j), ki, n);
    }
  }
  // symmetrize away factorization rounding
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (k_(i, j) + k_(j, i));
      k_(i, j) = v;
      k_(j, i) = v;
    }
}

Vec RoughnessMatrix::second_diff(const Vec& mu) const {
  const std::size_t n = grid_.size();
  if (mu.size() != n)
    throw InvalidInputError("RoughnessMatrix: vector length mismatch");
  Vec g(n - 2);
  for (std::size_t j = 0; j + 2 < n; ++j)
    g[j] = (mu[j + 2] - mu[j + 1]) / h_[j + 1] - (mu[j + 1] - mu[j]) / h_[j];
  return g;
}

double RoughnessMatrix::quad_form(const Vec& mu) const {
  Vec g = second_diff(mu);
  Vec sol = r_.solve(g);
  double q = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) q += g[i] * sol[i];
  return q > 0.0 ? q : 0.0;
}

Vec RoughnessMatrix::second_derivatives(const Vec& mu) const {
  Vec g = r_.solve(second_diff(mu));
  Vec m2(grid_.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) m2[i + 1] = g[i];
  return m2;
}

double roughness(const Vec& mu, const RoughnessMatrix& k) {
  return k.quad_form(mu);
}

RoughnessForm::RoughnessForm(const KnotGrid& grid)
    : h_(knot_gaps(grid)), r_(factor_r(h_)) {}

double RoughnessForm::quad_form(const Vec& mu) const {
  const std::size_t n = size();
  if (mu.size() != n)
    throw InvalidInputError("RoughnessForm: vector length mismatch");
  Vec g(n - 2);
  for (std::size_t j = 0; j + 2 < n; ++j)
    g[j] = (mu[j + 2] - mu[j + 1]) / h_[j + 1] - (mu[j + 1] - mu[j]) / h_[j];
  Vec sol = r_.solve(g);
  double q = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) q += g[i] * sol[i];
  return q > 0.0 ? q : 0.0;
}

double interpolate(const KnotGrid& knots, const Vec& mu, double s) {
  if (mu.size() != knots.size())
    throw InvalidInputError("interpolate: vector length mismatch");
  RoughnessMatrix rm(knots);  // small n only; heavy callers use value matrices
  const Vec m2 = rm.second_derivatives(mu);
  const std::size_t i = knots.interval(s);
  const double h = knots[i + 1] - knots[i];
  const double a = knots[i + 1] - s;
  const double b = s - knots[i];
  return m2[i] * (a * a * a / (6.0 * h) - h * a / 6.0) +
         m2[i + 1] * (b * b * b / (6.0 * h) - h * b / 6.0) + mu[i] * a / h +
         mu[i + 1] * b / h;
}

Smoother::Smoother(const RoughnessMatrix& k, double lambda)
    : lambda_(lambda), chol_(k.dense()) {
  if (!(lambda >= 0.0))
    throw InvalidInputError("Smoother: lambda must be nonnegative");
  const std::size_t n = k.size();
  for (std::size_t i = 0; i < n; ++i) {
    double* row = chol_.row(i);
    for (std::size_t j = 0; j < n; ++j) row[j] *= lambda;
    row[i] += 1.0;
  }
  if (!cholesky_inplace(chol_))
    throw NumericError("Smoother: factorization of I + lambda K failed");
}

Vec Smoother::apply(const Vec& mu) const { return chol_solve(chol_, mu); }

void Smoother::apply_rows(Matrix& b) const { chol_solve_many(chol_, b); }

double Smoother::edf() const { return chol_inverse_trace(chol_); }

Vec smooth(const Vec& mu, double lambda, const RoughnessMatrix& k) {
  if (mu.size() != k.size())
    throw InvalidInputError("smooth: vector length mismatch");
  return Smoother(k, lambda).apply(mu);
}

double lambda_for_edf(const RoughnessMatrix& k, double target_edf) {
  const double n = (double)k.size();
  if (!(target_edf > 2.0) || !(target_edf < n))
    throw InvalidInputError("lambda_for_edf: target must lie in (2, n)");
  const double span = k.grid().span();
  double lo = 1e-12 * span * span * span;
  double hi = lo;
  while (Smoother(k, lo).edf() < target_edf) lo /= 16.0;
  while (Smoother(k, hi).edf() > target_edf) hi *= 16.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (Smoother(k, mid).edf() > target_edf)
      lo = mid;
    else
      hi = mid;
    if (hi / lo < 1.0 + 1e-10) break;
  }
  return std::sqrt(lo * hi);
}

namespace {

// Shared assembly for the value and derivative evaluation matrices: both are
// linear in mu directly and in the interior second derivatives X mu.
Matrix build_eval_matrix(const KnotGrid& knots, const Vec& s_grid,
                         bool derivative) {
  check_finite_increasing(s_grid, "evaluation grid");
  if (s_grid.empty()) throw InvalidInputError("evaluation grid is empty");
  if (!(s_grid.front() >= knots.front()) || !(s_grid.back() <= knots.back()))
    throw InvalidInputError("evaluation grid leaves the knot span");
  const std::size_t n = knots.size();
  const std::size_t m = n - 2;
  Vec h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = knots[i + 1] - knots[i];
  Matrix x(m, n);
  for (std::size_t j = 0; j < m; ++j) {
    x(j, j) = 1.0 / h[j];
    x(j, j + 1) = -1.0 / h[j] - 1.0 / h[j + 1];
    x(j, j + 2) = 1.0 / h[j + 1];
  }
  factor_r(h).solve_rows(x);

  Matrix out(s_grid.size(), n);
  for (std::size_t r = 0; r < s_grid.size(); ++r) {
    const double s = s_grid[r];
    const std::size_t i = knots.interval(s);
    const double hi = h[i];
    const double a = knots[i + 1] - s;
    const double b = s - knots[i];
    double* row = out.row(r);
    double cmu_i, cmu_ip1, cm2_i, cm2_ip1;
    if (derivative) {
      cmu_i = -1.0 / hi;
      cmu_ip1 = 1.0 / hi;
      cm2_i = -a * a / (2.0 * hi) + hi / 6.0;
      cm2_ip1 = b * b / (2.0 * hi) - hi / 6.0;
    } else {
      cmu_i = a / hi;
      cmu_ip1 = b / hi;
      cm2_i = a * a * a / (6.0 * hi) - hi * a / 6.0;
      cm2_ip1 = b * b * b / (6.0 * hi) - hi * b / 6.0;
    }
    row[i] += cmu_i;
    row[i + 1] += cmu_ip1;
    // interior second-derivative rows are x[0..m-1] for knots 1..n-2
    if (i >= 1 && cm2_i != 0.0) kern::axpy(cm2_i, x.row(i - 1), row, n);
    if (i + 1 <= m && cm2_ip1 != 0.0) kern::axpy(cm2_ip1, x.row(i), row, n);
  }
  return out;
}

}  // namespace

DerivativeMatrix::DerivativeMatrix(const KnotGrid& knots, Vec s_grid)
    : d_(build_eval_matrix(knots, s_grid, true)), s_(std::move(s_grid)) {}

Matrix build_value_matrix(const KnotGrid& knots, const Vec& s_grid) {
  return build_eval_matrix(knots, s_grid, false);
}

}  // namespace conscale
