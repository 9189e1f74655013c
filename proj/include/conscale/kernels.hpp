#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops used by the linear algebra and the map stage.
// Each kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The active table is chosen once at startup from CPU
// capabilities; set CONSCALE_KERNELS=scalar (or =avx2) to force a lane.
// The two lanes are equivalence-tested against each other in the test suite.

namespace conscale::kern {

struct Ops {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i a[i]
  double (*sum)(const double* a, std::size_t n);
  // counts of strictly positive / strictly negative entries
  void (*sign_counts)(const double* a, std::size_t n, std::size_t* pos,
                      std::size_t* neg);
  // number of i with alive[i] != 0 and (sign > 0 ? a[i] > 0 : a[i] < 0)
  std::size_t (*survivors_count)(const std::uint8_t* alive, const double* a,
                                 std::size_t n, int sign);
  // alive[i] &= sign condition; returns surviving count
  std::size_t (*survivors_commit)(std::uint8_t* alive, const double* a,
                                  std::size_t n, int sign);
  const char* name;
};

// Reference table (always available).
const Ops& scalar_ops();

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported();
const Ops& avx2_ops();
#endif

// Table selected at first use; stable for the process lifetime.
const Ops& active();

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline double sum(const double* a, std::size_t n) { return active().sum(a, n); }

// C (rows x cols) = A (rows x inner) * B (inner x cols), all row-major.
// Accumulates along contiguous rows of B and C so the axpy kernel carries
// the arithmetic.
void matmul(const double* a, const double* b, double* c, std::size_t rows,
            std::size_t inner, std::size_t cols);

}  // namespace conscale::kern
