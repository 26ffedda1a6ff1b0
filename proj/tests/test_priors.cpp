#include <cmath>
#include <doctest.h>

#include "fixtures.hpp"
#include "ibcolor/info.hpp"
#include "ibcolor/priors.hpp"
#include "ibcolor/rng.hpp"

using namespace ibcolor;
namespace fx = ibcolor::testing;

TEST_CASE("identity channel capacity is log2 n with a uniform prior") {
  for (std::size_t n : {2u, 5u, 16u}) {
    Matrix channel(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) channel(i, i) = 1.0;
    LanguagePrior p = reference_prior(channel);
    CHECK(p.converged);
    CHECK(p.capacity == doctest::Approx(std::log2(double(n))).epsilon(1e-9));
    for (double x : p.probs) CHECK(x == doctest::Approx(1.0 / double(n)).epsilon(1e-9));
  }
}

TEST_CASE("constant channel has zero capacity and a uniform prior by convention") {
  Matrix channel(6, 3);
  for (std::size_t r = 0; r < 6; ++r) {
    channel(r, 0) = 0.2;
    channel(r, 1) = 0.5;
    channel(r, 2) = 0.3;
  }
  LanguagePrior p = reference_prior(channel);
  CHECK(p.converged);
  CHECK(p.capacity == doctest::Approx(0.0));
  for (double x : p.probs) CHECK(x == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
}

TEST_CASE("binary symmetric channel capacity matches the closed form") {
  // Oracle: C = 1 - H2(0.1).
  const double flip = 0.1;
  double h2 = -flip * std::log2(flip) - (1 - flip) * std::log2(1 - flip);
  Matrix channel(2, 2);
  channel(0, 0) = 1 - flip;
  channel(0, 1) = flip;
  channel(1, 0) = flip;
  channel(1, 1) = 1 - flip;
  LanguagePrior p = reference_prior(channel, 1e-10, 100000);
  CHECK(p.converged);
  CHECK(p.capacity == doctest::Approx(1.0 - h2).epsilon(1e-9));
  CHECK(p.probs[0] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("KKT conditions hold at convergence on random channels") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Matrix channel = fx::random_encoder(20, 6, seed);
    LanguagePrior p = reference_prior(channel, 1e-10, 100000);
    REQUIRE(p.converged);
    CHECK(capacity_kkt_violation_bits(channel, p.probs, p.capacity) < 1e-8);
  }
}

TEST_CASE("reference prior is invariant to word-column permutation") {
  Matrix channel = fx::random_encoder(12, 5, 77);
  Matrix permuted(12, 5);
  std::size_t perm[5] = {3, 0, 4, 1, 2};
  for (std::size_t r = 0; r < 12; ++r) {
    for (std::size_t c = 0; c < 5; ++c) permuted(r, perm[c]) = channel(r, c);
  }
  LanguagePrior a = reference_prior(channel);
  LanguagePrior b = reference_prior(permuted);
  CHECK(a.capacity == doctest::Approx(b.capacity).epsilon(1e-12));
  for (std::size_t c = 0; c < 12; ++c) {
    CHECK(a.probs[c] == doctest::Approx(b.probs[c]).epsilon(1e-9));
  }
}

TEST_CASE("non-convergence is reported with the last iterate") {
  Matrix channel = fx::random_encoder(10, 4, 5);
  LanguagePrior p = reference_prior(channel, 1e-14, 1);
  CHECK_FALSE(p.converged);
  CHECK(p.iterations == 1);
  CHECK(p.gap > 0.0);
  double total = 0.0;
  for (double x : p.probs) total += x;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("average_source of a single prior is that prior") {
  LanguagePrior p;
  p.language_id = 4;
  p.probs = {0.25, 0.75};
  CognitiveSource s = average_source({p});
  CHECK(s.probs == p.probs);
  CHECK(s.language_ids == std::vector<int>{4});
}

TEST_CASE("average_source of two opposite point masses is uniform") {
  LanguagePrior a, b;
  a.probs = {1.0, 0.0};
  b.probs = {0.0, 1.0};
  CognitiveSource s = average_source({a, b});
  CHECK(s.probs[0] == doctest::Approx(0.5));
  CHECK(s.probs[1] == doctest::Approx(0.5));
}

TEST_CASE("average_source matches an independent accumulation over many priors") {
  std::vector<LanguagePrior> priors;
  for (int l = 0; l < 110; ++l) {
    LanguagePrior p;
    p.language_id = l + 1;
    p.probs = fx::random_prior(50, 1000 + static_cast<std::uint64_t>(l));
    priors.push_back(std::move(p));
  }
  CognitiveSource s = average_source(priors);

  // Second-pass oracle: plain accumulation in long double.
  for (std::size_t c = 0; c < 50; ++c) {
    long double total = 0.0L;
    for (const auto& p : priors) total += p.probs[c];
    CHECK(s.probs[c] == doctest::Approx(static_cast<double>(total / 110.0L)).epsilon(1e-14));
  }
  double total = 0.0;
  for (double x : s.probs) total += x;
  CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("average_source rejects an empty list") {
  CHECK_THROWS_AS(average_source({}), std::invalid_argument);
}
