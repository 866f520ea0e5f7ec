#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "utep/losses.hpp"
#include "utep/ndgrad/gradcheck.hpp"

using namespace utep;
namespace ag = utep::ndgrad;
using utep::ndgrad::RngStream;
using utep::test::random_array;

TEST_SUITE("losses") {

TEST_CASE("classifier loss examples") {
  Tape t;
  const std::vector<int> y = {2};
  CHECK(loss_classifier(t.constant(Array2{{0.0, 0.0, 1.0}}), y).item() == 0.0);
  const std::vector<int> y0 = {0};
  CHECK(loss_classifier(t.constant(Array2{{0.25, 0.25, 0.25, 0.25}}), y0).item() ==
        doctest::Approx(1.3863).epsilon(1e-4));
  CHECK(loss_classifier(t.constant(Array2{{0.25, 0.25, 0.25, 0.25}}), y0).item() ==
        doctest::Approx(-std::log(0.25)).epsilon(1e-15));
  const std::vector<int> y2 = {0, 1};
  const std::vector<double> zero = {0.0, 0.0};
  CHECK(loss_classifier(t.constant(Array2{{0.3, 0.7}, {0.6, 0.4}}), y2, zero).item() == 0.0);
}

TEST_CASE("classifier loss errors") {
  Tape t;
  CHECK_THROWS_AS(loss_classifier(t.constant(Array2(0, 3)), std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS(loss_classifier(t.constant(Array2{{0.5, 0.5}}), std::vector<int>{2}));
}

TEST_CASE("log clamp keeps a zero probability finite") {
  Tape t;
  const double v = loss_classifier(t.constant(Array2{{1.0, 0.0}}), std::vector<int>{1}).item();
  CHECK(v == doctest::Approx(-std::log(kLogFloor)));
}

TEST_CASE("weighted adversarial loss") {
  Tape t;
  Var ps = t.constant(Array2{{0.5}});
  Var pt = t.constant(Array2{{0.2}, {0.7}});
  const std::vector<double> mu0s = {0.0};
  const std::vector<double> mu0t = {0.0, 0.0};
  // Source part for a single p = 0.5 sample with mu = 0.
  const double target_part = -(std::log(0.8) + std::log(0.3)) / 2.0;
  const double value = loss_adversarial_weighted(ps, pt, mu0s, mu0t).item();
  CHECK(value - target_part == doctest::Approx(0.6931).epsilon(1e-4));

  // mu = 0 is the unweighted domain term, bit for bit.
  CHECK(value == loss_adversarial_weighted(ps, pt, {}, {}).item());
  CHECK(value == doctest::Approx(-std::log(0.5) + target_part).epsilon(1e-15));

  const std::vector<double> mus = {1.0};
  const std::vector<double> mut = {0.5, 0.0};
  const double weighted = loss_adversarial_weighted(ps, pt, mus, mut).item();
  CHECK(weighted == doctest::Approx(-2.0 * std::log(0.5) - (1.5 * std::log(0.8) + std::log(0.3)) / 2.0));

  CHECK_THROWS_AS(loss_adversarial_weighted(t.constant(Array2(0, 1)), pt, {}, {}), std::invalid_argument);
}

TEST_CASE("mu enters the adversarial loss as a constant") {
  // d/dp of -(1 + mu) log p / n is -(1 + mu) / (p n): no term from mu itself.
  Tape t;
  Var ps = t.leaf(Array2{{0.3}, {0.6}});
  Var pt = t.leaf(Array2{{0.4}});
  const std::vector<double> mus = {0.2, 0.9};
  const std::vector<double> mut = {0.5};
  t.backward(loss_adversarial_weighted(ps, pt, mus, mut));
  CHECK(ps.grad()[0] == doctest::Approx(-1.2 / (0.3 * 2.0)));
  CHECK(ps.grad()[1] == doctest::Approx(-1.9 / (0.6 * 2.0)));
  CHECK(pt.grad()[0] == doctest::Approx(1.5 / 0.6));
}

TEST_CASE("bias loss") {
  Tape t;
  CHECK(loss_bias(t.constant(Array2(3, 1))).item() == 0.0);
  CHECK(loss_bias(t.constant(Array2{{0.01}, {0.02}})).item() == doctest::Approx(0.0005).epsilon(1e-12));
}

TEST_CASE("positive cluster loss") {
  Tape t;
  Var g = t.constant(Array2{{0.9, 0.05, 0.05}});
  const std::vector<double> one = {1.0};
  const std::vector<double> zero = {0.0};
  CHECK(loss_pce(g, Array2{{1.0, 0.0, 0.0}}, one).item() == doctest::Approx(0.09482).epsilon(1e-4));
  CHECK(loss_pce(g, Array2{{1.0, 0.0, 0.0}}, one).item() == doctest::Approx(-0.9 * std::log(0.9)).epsilon(1e-15));
  CHECK(loss_pce(g, Array2(1, 3), one).item() == 0.0);
  CHECK(loss_pce(g, Array2{{1.0, 1.0, 0.0}}, zero).item() == 0.0);
  CHECK(loss_pce(t.constant(Array2(0, 3)), Array2(0, 3), {}).item() == 0.0);
}

TEST_CASE("negative cluster loss") {
  Tape t;
  Var g = t.constant(Array2{{0.9, 0.05, 0.05}});
  const std::vector<double> one = {1.0};
  CHECK(loss_nce(g, Array2{{0.0, 1.0, 1.0}}, one).item() == doctest::Approx(0.09746).epsilon(1e-4));
  CHECK(loss_nce(g, Array2{{0.0, 1.0, 1.0}}, one).item() ==
        doctest::Approx(-2.0 * 0.95 * std::log(0.95)).epsilon(1e-15));
  CHECK(loss_nce(g, Array2(1, 3), one).item() == 0.0);
  CHECK(loss_nce(t.constant(Array2{{1.0, 0.0}}), Array2{{0.0, 1.0}}, one).item() == 0.0);
}

TEST_CASE("total loss") {
  Tape t;
  auto c = [&](double v) { return t.constant(Array2::scalar(v)); };
  const auto r = loss_total(c(0.4), c(0.6), c(0.5), c(0.1), c(0.1), LossWeights{1.0, 1.0, 1.0});
  CHECK(r.total.item() == doctest::Approx(1.7).epsilon(1e-15));
  CHECK(r.report.l_adv == doctest::Approx(1.0));
  CHECK(r.report.l_tce == doctest::Approx(0.2));
  CHECK(loss_total(c(0), c(0), c(0), c(0), c(0), {}).total.item() == 0.0);
  CHECK_THROWS_AS(loss_total(c(0), c(0), c(0), c(0), c(0), LossWeights{-1.0, 1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("zero weights reduce the total to the baseline objective bit for bit") {
  RngStream rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Tape t;
    Var l_y = t.constant(Array2::scalar(rng.uniform(0.0, 3.0)));
    Var l_d = t.constant(Array2::scalar(rng.uniform(0.0, 3.0)));
    const auto r = loss_total(l_y, l_d, t.constant(Array2::scalar(rng.uniform())),
                              t.constant(Array2::scalar(rng.uniform())), t.constant(Array2::scalar(rng.uniform())),
                              LossWeights{0.0, 0.0, 1.0});
    REQUIRE(r.total.item() == l_y.item() + l_d.item());
  }
}

TEST_CASE("loss gradients match central differences") {
  RngStream rng(4);
  ag::Parameter logits("logits", random_array(4, 3, rng));
  ag::Parameter u("u", random_array(4, 1, rng, 0.0, 0.3));
  ag::Parameter* params[] = {&logits, &u};
  const std::vector<int> y = {0, 1, 2, 1};
  const std::vector<double> s = {1.0, 0.5, 0.0, 0.8};
  const Array2 h{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 0}};
  const Array2 l{{0, 1, 1}, {1, 0, 0}, {0, 1, 0}, {0, 1, 1}};
  CHECK(ag::gradcheck([&](Tape& t) { return loss_classifier(ag::softmax(t.parameter(logits)), y); }, params)
            .max_relative_error < 1e-6);
  CHECK(ag::gradcheck([&](Tape& t) { return loss_pce(ag::softmax(t.parameter(logits)), h, s); }, params)
            .max_relative_error < 1e-6);
  CHECK(ag::gradcheck([&](Tape& t) { return loss_nce(ag::softmax(t.parameter(logits)), l, s); }, params)
            .max_relative_error < 1e-6);
  CHECK(ag::gradcheck([&](Tape& t) { return loss_bias(t.parameter(u)); }, params).max_relative_error < 1e-6);
}

}  // TEST_SUITE
