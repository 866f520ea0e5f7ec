#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "utep/evalmetrics.hpp"

using namespace utep;
using utep::test::random_array;

TEST_SUITE("evalmetrics") {

TEST_CASE("ratio from probability") {
  CHECK(ratio_from_probability(0.5) == 1.0);
  CHECK(ratio_from_probability(0.2) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(ratio_from_probability(1e-9) == 100.0);
  CHECK(ratio_from_probability(0.0) == 100.0);
  CHECK(ratio_from_probability(1.0) == 0.0);
  CHECK(ratio_from_probability(0.01, 10.0) == 10.0);
}

TEST_CASE("a-distance from error") {
  CHECK(a_distance_from_error(0.25) == 1.0);
  CHECK(a_distance_from_error(0.0) == 2.0);
  CHECK(a_distance_from_error(0.5) == 0.0);
  CHECK(a_distance_from_error(0.7) == 0.0);
}

TEST_CASE("proxy a-distance extremes") {
  RngStream rng(1);
  const Array2 a = random_array(200, 3, rng, -1.0, 1.0);
  const Array2 b = random_array(200, 3, rng, -1.0, 1.0);
  const auto same = proxy_a_distance(a, b, 1);
  CHECK(same.distance < 0.4);

  Array2 far = random_array(200, 3, rng, -1.0, 1.0);
  for (std::size_t i = 0; i < far.rows(); ++i) far(i, 0) += 10.0;
  const auto apart = proxy_a_distance(a, far, 1);
  CHECK(apart.error == 0.0);
  CHECK(apart.distance == 2.0);

  CHECK_THROWS_AS(proxy_a_distance(Array2(10, 3), b, 1), std::invalid_argument);
  CHECK_THROWS_AS(proxy_a_distance(a, Array2(30, 2), 1), ndgrad::ShapeError);
}

TEST_CASE("spearman") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {10, 20, 25, 100, 1000};
  const std::vector<double> z = {5, 4, 3, 2, 1};
  CHECK(spearman(x, y) == doctest::Approx(1.0));
  CHECK(spearman(x, z) == doctest::Approx(-1.0));
  // Ties take average ranks: ranks of {1, 1, 2} are {1.5, 1.5, 3}.
  const std::vector<double> t = {1, 1, 2};
  const std::vector<double> u = {1, 2, 3};
  const double ra[] = {1.5, 1.5, 3.0};
  const double rb[] = {1.0, 2.0, 3.0};
  double ma = 0, mb = 0;
  for (int i = 0; i < 3; ++i) ma += ra[i] / 3, mb += rb[i] / 3;
  double sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < 3; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  CHECK(spearman(t, u) == doctest::Approx(sab / std::sqrt(saa * sbb)));
  CHECK_THROWS(spearman(std::vector<double>{1.0}, std::vector<double>{2.0}));
}

TEST_CASE("density ratio is clamped per row") {
  NetConfig c;
  c.input_dim = 2;
  c.hidden_dim = 8;
  c.feature_dim = 4;
  c.disc_hidden = 4;
  RngStream rng(2);
  ModelBundle bundle(c, rng);
  const auto w = density_ratio(bundle, random_array(15, 2, rng), 3.0);
  REQUIRE(w.size() == 15);
  for (double v : w) {
    CHECK(v >= 0.0);
    CHECK(v <= 3.0);
  }
}

}  // TEST_SUITE
