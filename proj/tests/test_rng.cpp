#include <doctest.h>

#include <cmath>

#include "conscale/rng.hpp"

using namespace conscale;

TEST_CASE("same seed reproduces the stream exactly") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.gamma(3.5, 2.0) == b.gamma(3.5, 2.0));
  }
}

TEST_CASE("uniform stays inside the open unit interval") {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal moments") {
  Rng r(42);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gamma moments for several shapes") {
  Rng r(7);
  for (double shape : {0.4, 1.0, 2.5, 21.0}) {
    for (double rate : {0.5, 3.0}) {
      const int n = 100000;
      double s = 0.0, s2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double g = r.gamma(shape, rate);
        s += g;
        s2 += g * g;
      }
      const double mean = s / n;
      const double var = s2 / n - mean * mean;
      CHECK(mean == doctest::Approx(shape / rate).epsilon(0.03));
      CHECK(var == doctest::Approx(shape / (rate * rate)).epsilon(0.08));
    }
  }
}

TEST_CASE("chi-square mean equals the degrees of freedom") {
  Rng r(9);
  const double df = 7.0;
  const int n = 100000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.chi_square(df);
  CHECK(s / n == doctest::Approx(df).epsilon(0.02));
}
