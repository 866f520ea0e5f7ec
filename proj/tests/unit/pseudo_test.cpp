#include <doctest.h>

#include "support.hpp"
#include "utep/pseudo.hpp"

using namespace utep;
using utep::ndgrad::RngStream;
using utep::test::random_simplex;

namespace {

Array2 row(std::vector<double> g) {
  const std::size_t c = g.size();
  return Array2(1, c, std::move(g));
}

}  // namespace

TEST_SUITE("pseudo") {

TEST_CASE("positive selection") {
  CHECK(select_positive(row({0.9, 0.05, 0.05}), 0.8) == row({1, 0, 0}));
  CHECK(select_positive(row({1.0 / 3, 1.0 / 3, 1.0 / 3}), 0.5) == row({0, 0, 0}));
  CHECK(select_positive(row({0.7, 0.3}), 0.7) == row({1, 0}));
  CHECK_THROWS_AS(select_positive(row({0.5, 0.5}), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(select_positive(row({0.5, 0.5}), 0.0), std::invalid_argument);
}

TEST_CASE("negative selection") {
  CHECK(select_negative(row({0.9, 0.05, 0.05}), 0.1, 0.95) == row({0, 1, 1}));
  CHECK(select_negative(row({0.6, 0.4}), 1e-9, 0.95) == row({0, 0}));
  CHECK(select_negative(row({0.75, 0.25}), 0.25, 0.95) == row({0, 1}));
  CHECK_THROWS_AS(select_negative(row({0.5, 0.5}), 0.95, 0.95), std::invalid_argument);
  CHECK_THROWS_AS(select_negative(row({0.5, 0.5}), 0.6, 0.5), std::invalid_argument);
}

TEST_CASE("selection invariants over random probability vectors") {
  RngStream rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t c = 2 + rng.below(9);
    const double beta = rng.uniform(0.3, 0.99);
    const double gamma = rng.uniform(0.001, beta * 0.999);
    const Array2 g = row(random_simplex(c, rng));
    const auto set = select_pseudo_labels(g, beta, gamma);
    const Array2 h_higher = select_positive(g, std::min(0.999, beta + rng.uniform(0.0, 0.2)));
    const Array2 l_lower = select_negative(g, gamma * rng.uniform(0.1, 1.0), beta);
    for (std::size_t k = 0; k < c; ++k) {
      REQUIRE(set.positive[k] * set.negative[k] == 0.0);
      REQUIRE(h_higher[k] <= set.positive[k]);
      REQUIRE(l_lower[k] <= set.negative[k]);
    }
    REQUIRE(select_pseudo_labels(g, beta, gamma).positive == set.positive);
  }
}

}  // TEST_SUITE
