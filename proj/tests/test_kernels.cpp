#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "conscale/kernels.hpp"

using namespace conscale;

namespace {

std::vector<double> random_values(std::mt19937_64& eng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(eng);
  return v;
}

// sizes that exercise the vector width remainders
const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 1001};

}  // namespace

TEST_CASE("scalar reference kernels behave") {
  const auto& k = kern::scalar_ops();
  std::vector<double> a = {1.0, 2.0, 3.0};
  std::vector<double> b = {4.0, -5.0, 6.0};
  CHECK(k.dot(a.data(), b.data(), 3) == doctest::Approx(12.0));
  CHECK(k.sum(a.data(), 3) == doctest::Approx(6.0));
  k.axpy(2.0, a.data(), b.data(), 3);
  CHECK(b[0] == doctest::Approx(6.0));
  CHECK(b[2] == doctest::Approx(12.0));

  std::vector<double> s = {1.0, -1.0, 0.0, 2.0};
  std::size_t pos = 0, neg = 0;
  k.sign_counts(s.data(), 4, &pos, &neg);
  CHECK(pos == 2);
  CHECK(neg == 1);

  std::vector<std::uint8_t> alive = {1, 1, 0, 1};
  CHECK(k.survivors_count(alive.data(), s.data(), 4, +1) == 2);
  CHECK(k.survivors_count(alive.data(), s.data(), 4, -1) == 1);
  CHECK(k.survivors_commit(alive.data(), s.data(), 4, +1) == 2);
  CHECK(alive == std::vector<std::uint8_t>{1, 0, 0, 1});
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 lane agrees with the scalar reference") {
  if (!kern::avx2_supported()) return;
  const auto& sc = kern::scalar_ops();
  const auto& vx = kern::avx2_ops();
  std::mt19937_64 eng(7);

  for (std::size_t n : kSizes) {
    auto a = random_values(eng, n);
    auto b = random_values(eng, n);

    CHECK(vx.dot(a.data(), b.data(), n) ==
          doctest::Approx(sc.dot(a.data(), b.data(), n))
              .epsilon(1e-12)
              .scale(1.0 + std::fabs(sc.dot(a.data(), b.data(), n))));
    CHECK(vx.sum(a.data(), n) == doctest::Approx(sc.sum(a.data(), n)).epsilon(1e-12));

    auto y1 = b, y2 = b;
    sc.axpy(1.7, a.data(), y1.data(), n);
    vx.axpy(1.7, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-13));

    std::size_t p1 = 0, m1 = 0, p2 = 0, m2 = 0;
    sc.sign_counts(a.data(), n, &p1, &m1);
    vx.sign_counts(a.data(), n, &p2, &m2);
    CHECK(p1 == p2);
    CHECK(m1 == m2);

    std::vector<std::uint8_t> alive1(n), alive2(n);
    std::uniform_int_distribution<int> coin(0, 1);
    for (std::size_t i = 0; i < n; ++i) alive1[i] = alive2[i] = (std::uint8_t)coin(eng);
    for (int sign : {+1, -1}) {
      CHECK(sc.survivors_count(alive1.data(), a.data(), n, sign) ==
            vx.survivors_count(alive2.data(), a.data(), n, sign));
    }
    CHECK(sc.survivors_commit(alive1.data(), a.data(), n, +1) ==
          vx.survivors_commit(alive2.data(), a.data(), n, +1));
    CHECK(alive1 == alive2);
  }
}
#endif

TEST_CASE("matmul matches a straightforward triple loop") {
  std::mt19937_64 eng(11);
  for (auto [rows, inner, cols] :
       {std::array<std::size_t, 3>{1, 1, 1}, {3, 4, 5}, {7, 9, 13}, {16, 8, 32}}) {
    auto a = random_values(eng, rows * inner);
    auto b = random_values(eng, inner * cols);
    std::vector<double> c(rows * cols), ref(rows * cols, 0.0);
    kern::matmul(a.data(), b.data(), c.data(), rows, inner, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t p = 0; p < inner; ++p)
        for (std::size_t j = 0; j < cols; ++j)
          ref[i * cols + j] += a[i * inner + p] * b[p * cols + j];
    for (std::size_t i = 0; i < rows * cols; ++i)
      CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("active table resolves to a known lane") {
  const auto& k = kern::active();
  const bool scalar = std::string(k.name) == "scalar";
  const bool avx2 = std::string(k.name) == "avx2";
  CHECK((scalar || avx2));
}
