#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "netar/rng.hpp"

using namespace netar;

TEST_CASE("derive_seed has no collisions over 1e6 indices") {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(1000000);
  for (std::uint64_t i = 0; i < 1000000; ++i) seeds.push_back(derive_seed(20240101, i));
  std::sort(seeds.begin(), seeds.end());
  CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
}

TEST_CASE("two-level derivation has no collisions over a 1000 x 1000 block") {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(1000000);
  for (std::uint64_t a = 0; a < 1000; ++a)
    for (std::uint64_t b = 0; b < 1000; ++b) seeds.push_back(derive_seed(7, a, b));
  std::sort(seeds.begin(), seeds.end());
  CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
}

TEST_CASE("stream is a pure function of seed and position") {
  Stream a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(a.position() == 100);
  Stream c(100);
  CHECK(Stream(99).next_u64() != c.next_u64());
}

TEST_CASE("uniform stays in the open unit interval with mean one half") {
  Stream s(1);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::fabs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("normal quantile inverts the erfc-based CDF") {
  for (double p : {1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.5, 0.8, 0.97575, 0.999, 1 - 1e-9}) {
    const double z = normal_quantile(p);
    CHECK(normal_cdf(z) == doctest::Approx(p).epsilon(1e-8));
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-8));
}

TEST_CASE("below draws every value in range") {
  Stream s(5);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = s.below(7);
    REQUIRE(v < 7);
    ++hits[v];
  }
  for (int h : hits) CHECK(h > 800);
}
