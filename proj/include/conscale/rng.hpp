#pragma once

#include <cstdint>
#include <random>

namespace conscale {

// Seeded random stream with self-contained distribution samplers, so that a
// given seed reproduces the same draws regardless of the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // uniform on (0, 1)
  double uniform();
  // standard normal (Box-Muller, pair cached)
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Gamma(shape, rate), density proportional to x^{shape-1} e^{-rate x}
  double gamma(double shape, double rate);
  double chi_square(double df) { return gamma(0.5 * df, 0.5); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace conscale
