#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "support/quadrature.hpp"
#include "ulalab/rng.hpp"

using ula::RngStream;

TEST_CASE("streams are deterministic and distinct") {
  RngStream a(7), b(7), c(8);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool differs = false;
  RngStream a2(7);
  for (int i = 0; i < 100; ++i) differs |= (a2.next_u64() != c.next_u64());
  CHECK(differs);

  RngStream d0 = RngStream::derive(7, 0);
  RngStream d1 = RngStream::derive(7, 1);
  bool stream_differs = false;
  for (int i = 0; i < 100; ++i) stream_differs |= (d0.next_u64() != d1.next_u64());
  CHECK(stream_differs);
}

TEST_CASE("uniform lands in (0,1) with the right mean") {
  RngStream rng(123);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  const double mean = sum / n;
  const double se = std::sqrt(1.0 / 12.0 / n);
  CHECK(std::abs(mean - 0.5) < 3.0 * se);
}

TEST_CASE("normal moments match the standard normal") {
  RngStream rng(2024);
  const int n = 2000000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  const double mean = s1 / n, var = s2 / n, m4 = s4 / n;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
  // sd of the fourth-moment estimate is sqrt((E z^8 - (E z^4)^2)/n)
  CHECK(std::abs(m4 - 3.0) < 3.0 * std::sqrt((105.0 - 9.0) / n));
}

TEST_CASE("normal passes a KS test against the exact CDF") {
  RngStream rng(5150);
  const std::size_t n = 100000;
  std::vector<double> z(n);
  for (auto& v : z) v = rng.normal();
  std::sort(z.begin(), z.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
    ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
  }
  // 1% critical value of the Kolmogorov statistic
  CHECK(ks < 1.6276 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("gamma sampler matches Gamma(k,1) moments for k<1 and k>1") {
  for (double shape : {0.25, 0.5, 1.5}) {
    RngStream rng(99 + static_cast<std::uint64_t>(shape * 100));
    const int n = 1000000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      REQUIRE(g >= 0.0);
      s1 += g;
      s2 += g * g;
    }
    const double mean = s1 / n;
    const double m2 = s2 / n;
    // E G = k, E G^2 = k(k+1)
    CHECK(std::abs(mean - shape) < 3.0 * std::sqrt(shape / n));
    const double var_m2 = shape * (shape + 1) * (shape + 2) * (shape + 3) -
                          shape * shape * (shape + 1) * (shape + 1);
    CHECK(std::abs(m2 - shape * (shape + 1)) < 3.0 * std::sqrt(var_m2 / n));
  }
}
