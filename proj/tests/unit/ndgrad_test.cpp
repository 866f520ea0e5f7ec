#include <doctest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "utep/ndgrad/gradcheck.hpp"
#include "utep/ndgrad/ops.hpp"

namespace ag = utep::ndgrad;
using ag::Array2;
using ag::Parameter;
using ag::RngStream;
using ag::Tape;
using ag::Var;
using utep::test::random_array;

namespace {

// Central difference on a scalar function of one variable.
template <typename F>
double central_difference(F f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_SUITE("ndgrad") {

TEST_CASE("a*b + a at (2, 3)") {
  Tape t;
  Var a = t.leaf(Array2::scalar(2.0));
  Var b = t.leaf(Array2::scalar(3.0));
  Var f = ag::add(ag::mul(a, b), a);
  t.backward(f);
  CHECK(f.item() == 8.0);

  auto fa = [](double x) { return x * 3.0 + x; };
  auto fb = [](double y) { return 2.0 * y + 2.0; };
  CHECK(a.grad()[0] == doctest::Approx(central_difference(fa, 2.0)).epsilon(1e-8));
  CHECK(b.grad()[0] == doctest::Approx(central_difference(fb, 3.0)).epsilon(1e-8));
  CHECK(a.grad()[0] == 4.0);
  CHECK(b.grad()[0] == 2.0);
}

TEST_CASE("softmax of a zero row is uniform") {
  Tape t;
  Var s = ag::softmax(t.constant(Array2(1, 3)));
  for (double v : s.value().data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("gradient reversal with lambda 0 blocks the gradient") {
  Parameter w("w", Array2{{0.5, -1.0}, {2.0, 0.1}});
  Tape t;
  Var x = t.constant(Array2{{1.0, 2.0}});
  Var y = ag::gradient_reverse(ag::matmul(x, t.parameter(w)), 0.0);
  t.backward(ag::sum(ag::square(y)));
  for (double g : w.grad.data()) CHECK(g == 0.0);
}

TEST_CASE("gradient reversal negates and scales") {
  Tape t;
  Var a = t.leaf(Array2{{1.0, -2.0}});
  Var y = ag::gradient_reverse(a, 0.25);
  CHECK(y.value() == a.value());
  t.backward(ag::sum(ag::scale(y, 3.0)));
  CHECK(a.grad()(0, 0) == -0.75);
  CHECK(a.grad()(0, 1) == -0.75);
}

TEST_CASE("shape mismatch names both shapes") {
  Tape t;
  Var a = t.constant(Array2(2, 3));
  Var b = t.constant(Array2(3, 2));
  try {
    (void)ag::mul(a, b);
    FAIL("expected ShapeError");
  } catch (const ag::ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("3x2") != std::string::npos);
  }
  CHECK_THROWS_AS((void)ag::matmul(a, a), ag::ShapeError);
}

TEST_CASE("non-finite values are rejected") {
  Tape t;
  Array2 bad(1, 2);
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)t.constant(bad), ag::NonFiniteError);
  Var big = t.constant(Array2{{800.0}});
  CHECK_THROWS_AS((void)ag::exp(big), ag::NonFiniteError);
  CHECK_THROWS_AS((void)ag::log(t.constant(Array2{{0.0}})), ag::NonFiniteError);
}

TEST_CASE("backward requires a scalar output") {
  Tape t;
  Var a = t.leaf(Array2(2, 2, 1.0));
  CHECK_THROWS_AS(t.backward(a), ag::ShapeError);
}

TEST_CASE("shared subexpressions accumulate gradients") {
  RngStream rng(7);
  Parameter p("p", random_array(3, 2, rng));
  const Array2 dir = random_array(3, 2, rng);

  auto f = [&](Tape& t) { return ag::mul(ag::sigmoid(t.parameter(p)), t.constant(dir)); };
  Tape t1;
  Var fx = f(t1);
  t1.backward(ag::sum(ag::add(fx, fx)));
  const Array2 twice_shared = p.grad;

  p.zero_grad();
  Tape t2;
  t2.backward(ag::sum(ag::scale(f(t2), 2.0)));
  for (std::size_t i = 0; i < p.grad.size(); ++i) CHECK(twice_shared[i] == doctest::Approx(p.grad[i]).epsilon(1e-14));
}

TEST_CASE("parameter gradients add up across backward passes") {
  Parameter p("p", Array2{{1.5}});
  for (int k = 0; k < 3; ++k) {
    Tape t;
    t.backward(ag::square(t.parameter(p)));
  }
  CHECK(p.grad[0] == doctest::Approx(9.0));
}

TEST_CASE("linear layer with squared error passes gradcheck") {
  RngStream rng(11);
  Parameter w("w", random_array(3, 2, rng));
  Parameter b("b", random_array(1, 2, rng));
  const Array2 x = random_array(5, 3, rng);
  const Array2 y = random_array(5, 2, rng);
  Parameter* params[] = {&w, &b};
  auto fn = [&](Tape& t) {
    Var pred = ag::add(ag::matmul(t.constant(x), t.parameter(w)), t.parameter(b));
    return ag::mean(ag::square(ag::sub(pred, t.constant(y))));
  };
  const auto r = ag::gradcheck(fn, params);
  CHECK(r.entries_checked == 8);
  CHECK(r.max_relative_error < 1e-6);
}

TEST_CASE("constant function has zero error") {
  Parameter p("p", Array2{{1.0, 2.0}});
  Parameter* params[] = {&p};
  const auto r = ag::gradcheck([](Tape& t) { return t.constant(Array2::scalar(4.0)); }, params);
  CHECK(r.max_relative_error == 0.0);
  CHECK(r.max_abs_analytic == 0.0);
}

TEST_CASE("gradcheck rejects a non-scalar graph") {
  Parameter p("p", Array2{{1.0, 2.0}});
  Parameter* params[] = {&p};
  CHECK_THROWS_AS(ag::gradcheck([&](Tape& t) { return t.parameter(p); }, params), ag::ShapeError);
}

TEST_CASE("every op matches central differences on random inputs") {
  // Property: for random inputs in [-2, 2] each op's gradient agrees with
  // central differences. Several draws per op.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RngStream rng = RngStream::derive(seed, "ops-property");
    Parameter a("a", random_array(3, 4, rng));
    Parameter b("b", random_array(3, 4, rng));
    Parameter pos("pos", random_array(3, 4, rng, 0.2, 2.0));
    Parameter m("m", random_array(4, 3, rng));
    Array2 mask(3, 4);
    for (double& v : mask.data()) v = rng.bernoulli(0.6) ? 1.0 : 0.0;
    const Array2 dir = random_array(3, 4, rng);
    const Array2 dir3 = random_array(3, 3, rng);
    auto project = [](Var v, const Array2& d) { return ag::sum(ag::mul(v, v.tape().constant(d))); };

    std::vector<std::pair<std::string, ag::GraphFn>> cases = {
        {"matmul", [&](Tape& t) { return project(ag::matmul(t.parameter(a), t.parameter(m)), dir3); }},
        {"mul", [&](Tape& t) { return project(ag::mul(t.parameter(a), t.parameter(b)), dir); }},
        {"sigmoid", [&](Tape& t) { return project(ag::sigmoid(t.parameter(a)), dir); }},
        {"softmax", [&](Tape& t) { return project(ag::softmax(t.parameter(a)), dir); }},
        {"log", [&](Tape& t) { return project(ag::log(t.parameter(pos)), dir); }},
        {"exp", [&](Tape& t) { return project(ag::exp(t.parameter(a)), dir); }},
        {"square", [&](Tape& t) { return project(ag::square(t.parameter(a)), dir); }},
        {"mean", [&](Tape& t) { return ag::mean(ag::mul(t.parameter(a), t.parameter(b))); }},
        {"dropout", [&](Tape& t) { return project(ag::dropout(t.parameter(a), mask, 0.4), dir); }},
    };
    Parameter* params[] = {&a, &b, &pos, &m};
    for (const auto& [name, fn] : cases) {
      CAPTURE(name);
      CAPTURE(seed);
      CHECK(ag::gradcheck(fn, params).max_relative_error < 1e-5);
    }
  }
}

TEST_CASE("same seed and graph give bit-identical values and gradients") {
  auto run = [] {
    RngStream rng(99);
    Parameter w("w", random_array(4, 3, rng));
    const Array2 x = random_array(6, 4, rng);
    Tape t;
    Var out = ag::mean(ag::softmax(ag::relu(ag::matmul(t.constant(x), t.parameter(w)))));
    t.backward(out);
    return std::make_pair(out.item(), w.grad);
  };
  const auto first = run();
  const auto second = run();
  CHECK(first.first == second.first);
  CHECK(first.second == second.second);
}

TEST_CASE("rng streams are reproducible and distinct by purpose") {
  RngStream a = RngStream::derive(5, "dropout");
  RngStream b = RngStream::derive(5, "dropout");
  RngStream c = RngStream::derive(5, "init");
  RngStream d = RngStream::derive(5, "dropout", 1);
  const auto va = a.next_u64();
  CHECK(va == b.next_u64());
  CHECK(va != c.next_u64());
  CHECK(va != d.next_u64());

  RngStream r(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(r.below(7) < 7);
  }
}

}  // TEST_SUITE
