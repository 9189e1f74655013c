#include "conscale/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace conscale::kern {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
  }
  if (i < n) s0 += a[i] * b[i];
  return s0 + s1;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

void sign_counts_scalar(const double* a, std::size_t n, std::size_t* pos,
                        std::size_t* neg) {
  std::size_t p = 0, m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    p += a[i] > 0.0;
    m += a[i] < 0.0;
  }
  *pos = p;
  *neg = m;
}

std::size_t survivors_count_scalar(const std::uint8_t* alive, const double* a,
                                   std::size_t n, int sign) {
  std::size_t c = 0;
  if (sign > 0) {
    for (std::size_t i = 0; i < n; ++i) c += alive[i] && a[i] > 0.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) c += alive[i] && a[i] < 0.0;
  }
  return c;
}

std::size_t survivors_commit_scalar(std::uint8_t* alive, const double* a,
                                    std::size_t n, int sign) {
  std::size_t c = 0;
  if (sign > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      alive[i] = alive[i] && a[i] > 0.0;
      c += alive[i];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      alive[i] = alive[i] && a[i] < 0.0;
      c += alive[i];
    }
  }
  return c;
}

const Ops kScalar = {dot_scalar,   axpy_scalar,
                     sum_scalar,   sign_counts_scalar,
                     survivors_count_scalar, survivors_commit_scalar,
                     "scalar"};

const Ops& pick() {
  if (const char* force = std::getenv("CONSCALE_KERNELS")) {
    if (std::strcmp(force, "scalar") == 0) return kScalar;
#if defined(__x86_64__) || defined(_M_X64)
    if (std::strcmp(force, "avx2") == 0 && avx2_supported()) return avx2_ops();
#endif
    return kScalar;
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) return avx2_ops();
#endif
  return kScalar;
}

}  // namespace

const Ops& scalar_ops() { return kScalar; }

const Ops& active() {
  static const Ops& table = pick();
  return table;
}

void matmul(const double* a, const double* b, double* c, std::size_t rows,
            std::size_t inner, std::size_t cols) {
  const Ops& k = active();
  for (std::size_t i = 0; i < rows; ++i) {
    double* ci = c + i * cols;
    for (std::size_t j = 0; j < cols; ++j) ci[j] = 0.0;
    const double* ai = a + i * inner;
    for (std::size_t p = 0; p < inner; ++p) {
      if (ai[p] != 0.0) k.axpy(ai[p], b + p * cols, ci, cols);
    }
  }
}

}  // namespace conscale::kern
