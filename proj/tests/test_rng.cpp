#include <doctest.h>

#include <set>

#include "multimix/rng.hpp"
#include "oracles.hpp"

using multimix::Rng;

TEST_CASE("same seed, same stream") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("uniform is KS-uniform on [0,1)") {
  Rng rng(1);
  std::vector<double> xs(100000);
  for (auto& x : xs) {
    x = rng.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
  CHECK(oracle::ks_one_sample(xs, [](double x) { return x; }) < oracle::ks_one_sample_critical(xs.size()));
}

TEST_CASE("normal moments") {
  Rng rng(2);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(n));
  // var of the sample second moment is 2 for a standard normal
  CHECK(std::abs(sq / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("below covers the range evenly") {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
  const double p = 1.0 / 7.0, sigma = std::sqrt(n * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - n * p) < 4.0 * sigma);
}

TEST_CASE("split streams are deterministic and distinct") {
  Rng root(9);
  auto a = root.split(0), b = root.split(0), c = root.split(1);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
  CHECK(Rng::derive_seed(9, 0) != Rng::derive_seed(9, 1));
}
