#pragma once

#include <cstddef>

#include "conscale/linalg.hpp"

namespace conscale {

// Strictly increasing spline knot locations on the internal forward time
// axis (years, increasing toward the present).
class KnotGrid {
 public:
  explicit KnotGrid(Vec knots);
  std::size_t size() const { return knots_.size(); }
  double operator[](std::size_t i) const { return knots_[i]; }
  const Vec& values() const { return knots_; }
  double front() const { return knots_.front(); }
  double back() const { return knots_.back(); }
  double span() const { return knots_.back() - knots_.front(); }
  // Index i with knots[i] <= s <= knots[i+1]; s must lie inside the span.
  std::size_t interval(double s) const;

 private:
  Vec knots_;
};

// Roughness penalty of a natural cubic spline: mu^T K mu equals the integral
// of the squared second derivative of the interpolant of mu over the knot
// span. K is dense, symmetric, positive semidefinite of rank n-2, built from
// the banded second-difference matrix Q and the tridiagonal Gram matrix R.
class RoughnessMatrix {
 public:
  explicit RoughnessMatrix(KnotGrid grid);
  const KnotGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  const Matrix& dense() const { return k_; }
  // mu^T K mu through the banded route (independent of the dense matrix).
  double quad_form(const Vec& mu) const;
  // Second derivatives of the natural interpolant at every knot
  // (zero at the two boundary knots).
  Vec second_derivatives(const Vec& mu) const;

 private:
  Vec second_diff(const Vec& mu) const;  // Q^T mu, length n-2

  KnotGrid grid_;
  Vec h_;                 // knot gaps
  TridiagFactor r_;       // factored R
  Matrix k_;              // dense K
};

double roughness(const Vec& mu, const RoughnessMatrix& k);

// Quadratic-form-only variant of RoughnessMatrix: O(n) storage, no dense K.
// Used where the penalty is evaluated many times on changing knot grids.
class RoughnessForm {
 public:
  explicit RoughnessForm(const KnotGrid& grid);
  std::size_t size() const { return h_.size() + 1; }
  double quad_form(const Vec& mu) const;

 private:
  Vec h_;
  TridiagFactor r_;
};

// Value of the natural cubic interpolant of (knots, mu) at s.
double interpolate(const KnotGrid& knots, const Vec& mu, double s);

// Smoothing-spline operator S = (I + lambda K)^{-1}, factored once.
class Smoother {
 public:
  Smoother(const RoughnessMatrix& k, double lambda);
  double lambda() const { return lambda_; }
  Vec apply(const Vec& mu) const;
  void apply_rows(Matrix& b) const;  // solves for every column of B in place
  // Effective degrees of freedom, the trace of S.
  double edf() const;

 private:
  double lambda_;
  Matrix chol_;
};

Vec smooth(const Vec& mu, double lambda, const RoughnessMatrix& k);

// lambda whose smoother has the requested effective degrees of freedom,
// found by bisection on log lambda. target must lie in (2, n).
double lambda_for_edf(const RoughnessMatrix& k, double target_edf);

// Rows evaluate the first derivative of the natural cubic interpolant at the
// points of a strictly increasing evaluation grid inside the knot span.
class DerivativeMatrix {
 public:
  DerivativeMatrix(const KnotGrid& knots, Vec s_grid);
  const Matrix& dense() const { return d_; }
  const Vec& s_grid() const { return s_; }

 private:
  Matrix d_;
  Vec s_;
};

// Same layout as DerivativeMatrix but rows evaluate the interpolant itself.
Matrix build_value_matrix(const KnotGrid& knots, const Vec& s_grid);

}  // namespace conscale
