#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "tactile/core.hpp"
#include "tactile/metrics.hpp"

using namespace tactile;

namespace {

std::vector<double> random_probs(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& v : p) {
    v = uniform01(rng) + 1e-6;
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

TEST_CASE("entropy matches closed forms") {
  std::vector<double> uniform10(10, 0.1);
  CHECK(entropy(uniform10) == doctest::Approx(std::log(10.0)).epsilon(1e-12));

  std::vector<double> onehot{0.0, 1.0, 0.0};
  CHECK(entropy(onehot) == 0.0);

  std::vector<double> skewed{0.7, 0.3};
  CHECK(entropy(skewed) == doctest::Approx(0.61086430205489354).epsilon(1e-14));
}

TEST_CASE("entropy rejects malformed probability vectors") {
  CHECK_THROWS_AS(entropy(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(entropy(std::vector<double>{0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(entropy(std::vector<double>{1.2, -0.2}), std::invalid_argument);
  double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(entropy(std::vector<double>{inf, 0.0}), std::invalid_argument);
  // 1e-6 sum tolerance is inclusive on the inside, violated just beyond
  CHECK_NOTHROW(entropy(std::vector<double>{0.5, 0.5 + 0.9e-6}));
  CHECK_THROWS_AS(entropy(std::vector<double>{0.5, 0.5 + 1.1e-6}), std::invalid_argument);
}

TEST_CASE("margin is 1 minus the top-two gap") {
  CHECK(margin_informativeness(std::vector<double>{1.0, 0.0, 0.0}) == doctest::Approx(0.0));
  std::vector<double> uniform4(4, 0.25);
  CHECK(margin_informativeness(uniform4) == doctest::Approx(1.0));
  CHECK(margin_informativeness(std::vector<double>{0.6, 0.3, 0.1}) ==
        doctest::Approx(0.7).epsilon(1e-14));
  // order independent
  CHECK(margin_informativeness(std::vector<double>{0.1, 0.6, 0.3}) ==
        margin_informativeness(std::vector<double>{0.6, 0.3, 0.1}));
  CHECK_THROWS_AS(margin_informativeness(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("cosine distance handles alignment, orthogonality, zero norms") {
  std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0}, diag{1.0, 1.0}, zero{0.0, 0.0};
  CHECK(cosine_distance(e1, e1) == 0.0);
  CHECK(cosine_distance(e1, e2) == 1.0);
  CHECK(cosine_distance(e1, diag) == doctest::Approx(0.29289321881345243).epsilon(1e-14));
  CHECK(cosine_distance(zero, e1) == 1.0);
  CHECK(cosine_distance(zero, zero) == 1.0);
  CHECK_THROWS_AS(cosine_distance(e1, std::vector<double>{1.0, 0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(cosine_distance(std::vector<double>{}, std::vector<double>{}),
                  std::invalid_argument);
}

TEST_CASE("cosine distance ignores positive scaling") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> u(4), v(4);
    for (double& x : u) x = uniform01(rng) * 2.0 - 1.0;
    for (double& x : v) x = uniform01(rng) * 2.0 - 1.0;
    double a = 0.1 + uniform01(rng) * 5.0;
    double b = 0.1 + uniform01(rng) * 5.0;
    std::vector<double> ua = u, vb = v;
    for (double& x : ua) x *= a;
    for (double& x : vb) x *= b;
    CHECK(cosine_distance(ua, vb) == doctest::Approx(cosine_distance(u, v)).epsilon(1e-12));
  }
}

TEST_CASE("diversity over small sets") {
  CHECK(diversity({}) == 0.0);
  CHECK(diversity({{1.0, 2.0}}) == 0.0);
  std::vector<std::vector<double>> basis{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  CHECK(diversity(basis) == 1.0);
  std::vector<std::vector<double>> mixed{{1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  CHECK(diversity(mixed) == doctest::Approx(0.5285954792089683).epsilon(1e-14));
  std::vector<std::vector<double>> same{{0.0, 1.0}, {0.0, 1.0}};
  CHECK(diversity(same) == doctest::Approx(0.0));
  CHECK_THROWS_AS(diversity({{1.0, 0.0}, {1.0}}), std::invalid_argument);
}

TEST_CASE("info objective sums member entropies") {
  CHECK(info_objective({}) == 0.0);
  std::vector<std::vector<double>> two{std::vector<double>(10, 0.1),
                                       std::vector<double>(10, 0.1)};
  CHECK(info_objective(two) == doctest::Approx(2.0 * std::log(10.0)).epsilon(1e-12));
  std::vector<std::vector<double>> mix{{1.0, 0.0}, {0.7, 0.3}};
  CHECK(info_objective(mix) == doctest::Approx(0.61086430205489354).epsilon(1e-14));
  CHECK_THROWS_AS(info_objective({{0.5, 0.4}}), std::invalid_argument);
}

TEST_CASE("logdet diversity matches closed forms") {
  CHECK(logdet_diversity({}, 1.0) == 0.0);
  // one unit vector: (1/2) ln det(1 + 1) = (1/2) ln 2
  CHECK(logdet_diversity({{1.0, 0.0}}, 1.0) ==
        doctest::Approx(0.34657359027997264).epsilon(1e-14));
  // two orthogonal unit vectors: (1/2) ln det(diag(2, 2)) = ln 2
  CHECK(logdet_diversity({{1.0, 0.0}, {0.0, 1.0}}, 1.0) ==
        doctest::Approx(0.69314718055994531).epsilon(1e-14));
  // duplicate unit vector: M = [[2, 1], [1, 2]], det = 3
  CHECK(logdet_diversity({{1.0, 0.0}, {1.0, 0.0}}, 1.0) ==
        doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(logdet_diversity({{1.0}}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(logdet_diversity({{1.0}}, -1.0), std::invalid_argument);
}

TEST_CASE("logdet diversity is permutation and scale invariant") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    std::vector<std::vector<double>> f(3, std::vector<double>(5));
    for (auto& row : f)
      for (double& x : row) x = uniform01(rng) * 2.0 - 1.0;
    double base = logdet_diversity(f, 0.8);
    std::vector<std::vector<double>> perm{f[2], f[0], f[1]};
    CHECK(logdet_diversity(perm, 0.8) == doctest::Approx(base).epsilon(1e-11));
    std::vector<std::vector<double>> scaled = f;
    for (double& x : scaled[0]) x *= 7.5;
    for (double& x : scaled[2]) x *= 0.02;
    CHECK(logdet_diversity(scaled, 0.8) == doctest::Approx(base).epsilon(1e-11));
  }
}

TEST_CASE("logdet diversity grows when a duplicate is replaced by something new") {
  std::vector<std::vector<double>> dup{{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  std::vector<std::vector<double>> spread{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  CHECK(logdet_diversity(spread, 1.0) > logdet_diversity(dup, 1.0));
}

TEST_CASE("combined objective is the weighted sum of both terms") {
  std::mt19937_64 rng(23);
  std::vector<std::vector<double>> probs{random_probs(rng, 4), random_probs(rng, 4)};
  std::vector<std::vector<double>> feats{{1.0, 0.5, 0.0}, {0.0, 0.5, 1.0}};

  ObjectiveWeights info_only{2.0, 0.0, 1.0};
  CHECK(combined_objective(probs, feats, info_only) ==
        doctest::Approx(2.0 * info_objective(probs)).epsilon(1e-12));

  ObjectiveWeights div_only{0.0, 3.0, 1.0};
  CHECK(combined_objective(probs, feats, div_only) ==
        doctest::Approx(3.0 * logdet_diversity(feats, 1.0)).epsilon(1e-12));

  ObjectiveWeights both{1.5, 0.5, 0.7};
  CHECK(combined_objective(probs, feats, both) ==
        doctest::Approx(1.5 * info_objective(probs) +
                        0.5 * logdet_diversity(feats, 0.7)).epsilon(1e-12));

  CHECK_THROWS_AS(combined_objective(probs, {{1.0, 0.0, 0.0}}, both),
                  std::invalid_argument);
}

TEST_CASE("objective weights validate their ranges") {
  CHECK_NOTHROW(ObjectiveWeights{1.0, 1.0, 1.0}.validate());
  CHECK_NOTHROW(ObjectiveWeights{0.0, 0.0, 0.5}.validate());
  CHECK_THROWS_AS((ObjectiveWeights{-1.0, 1.0, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ObjectiveWeights{1.0, -0.5, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ObjectiveWeights{1.0, 1.0, 0.0}.validate()), std::invalid_argument);
  double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((ObjectiveWeights{nan, 1.0, 1.0}.validate()), std::invalid_argument);
}
