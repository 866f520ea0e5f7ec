#include "utep/cli/gradsuite.hpp"

#include <cmath>

#include "utep/losses.hpp"
#include "utep/nets.hpp"
#include "utep/ndgrad/ops.hpp"
#include "utep/pseudo.hpp"
#include "utep/uncertainty.hpp"

namespace utep::cli {

namespace ag = ndgrad;
using ag::Array2;
using ag::Parameter;
using ag::RngStream;
using ag::Tape;
using ag::Var;

namespace {

Array2 random(std::size_t r, std::size_t c, RngStream& rng, double lo = -1.0, double hi = 1.0) {
  Array2 a(r, c);
  for (double& v : a.data()) v = rng.uniform(lo, hi);
  return a;
}

// Entries bounded away from zero so relu's kink is never straddled.
Array2 away_from_zero(std::size_t r, std::size_t c, RngStream& rng) {
  Array2 a(r, c);
  for (double& v : a.data()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.2, 1.0);
  return a;
}

Array2 binary(std::size_t r, std::size_t c, RngStream& rng, double p) {
  Array2 a(r, c);
  for (double& v : a.data()) v = rng.bernoulli(p) ? 1.0 : 0.0;
  return a;
}

// Projects a matrix output onto a fixed random direction.
Var reduce(Var v, const Array2& dir) { return ag::sum(ag::mul(v, v.tape().constant(dir))); }

class Suite {
 public:
  explicit Suite(std::uint64_t seed) : rng_(RngStream::derive(seed, "gradcheck")) {}

  Parameter make(const std::string& name, Array2 value) { return Parameter(name, std::move(value)); }

  template <typename Fn>
  void check(const std::string& name, std::vector<Parameter*> params, Fn fn, double numeric_scale = 1.0) {
    out_.push_back({name, ag::gradcheck(fn, params, 1e-5, numeric_scale)});
  }

  RngStream& rng() { return rng_; }
  std::vector<OpCheck> take() { return std::move(out_); }

 private:
  RngStream rng_;
  std::vector<OpCheck> out_;
};

void elementwise_ops(Suite& s) {
  auto& rng = s.rng();
  Parameter a = s.make("a", random(3, 4, rng));
  Parameter b = s.make("b", random(3, 4, rng));
  Parameter bias = s.make("bias", random(1, 4, rng));
  Parameter m = s.make("m", random(4, 2, rng));
  Parameter pos = s.make("pos", random(3, 4, rng, 0.5, 2.0));
  Parameter kinked = s.make("kinked", away_from_zero(3, 4, rng));
  const Array2 dir = random(3, 4, rng);
  const Array2 dir2 = random(3, 2, rng);
  const Array2 dir_col = random(3, 1, rng);

  s.check("matmul", {&a, &m}, [&](Tape& t) { return reduce(ag::matmul(t.parameter(a), t.parameter(m)), dir2); });
  s.check("add", {&a, &b, &bias}, [&](Tape& t) {
    return reduce(ag::add(ag::add(t.parameter(a), t.parameter(b)), t.parameter(bias)), dir);
  });
  s.check("sub", {&a, &b}, [&](Tape& t) { return reduce(ag::sub(t.parameter(a), t.parameter(b)), dir); });
  s.check("mul", {&a, &b}, [&](Tape& t) { return reduce(ag::mul(t.parameter(a), t.parameter(b)), dir); });
  s.check("scale", {&a}, [&](Tape& t) { return reduce(ag::scale(t.parameter(a), 1.7), dir); });
  s.check("add_scalar", {&a}, [&](Tape& t) { return reduce(ag::add_scalar(t.parameter(a), 0.3), dir); });
  s.check("one_minus", {&a}, [&](Tape& t) { return reduce(ag::one_minus(t.parameter(a)), dir); });
  s.check("relu", {&kinked}, [&](Tape& t) { return reduce(ag::relu(t.parameter(kinked)), dir); });
  s.check("sigmoid", {&a}, [&](Tape& t) { return reduce(ag::sigmoid(t.parameter(a)), dir); });
  s.check("softmax", {&a}, [&](Tape& t) { return reduce(ag::softmax(t.parameter(a)), dir); });
  s.check("log", {&pos}, [&](Tape& t) { return reduce(ag::log(t.parameter(pos), 1e-12), dir); });
  s.check("exp", {&a}, [&](Tape& t) { return reduce(ag::exp(t.parameter(a)), dir); });
  s.check("square", {&a}, [&](Tape& t) { return reduce(ag::square(t.parameter(a)), dir); });
  s.check("sum", {&a}, [&](Tape& t) { return ag::sum(ag::square(t.parameter(a))); });
  s.check("mean", {&a}, [&](Tape& t) { return ag::mean(ag::square(t.parameter(a))); });
  s.check("row_sum", {&a}, [&](Tape& t) { return reduce(ag::row_sum(t.parameter(a)), dir_col); });

  const Array2 dir_rows = random(6, 4, rng);
  s.check("concat_rows", {&a, &b}, [&](Tape& t) {
    const Var parts[] = {t.parameter(a), t.parameter(b)};
    return reduce(ag::concat_rows(parts), dir_rows);
  });
  const Array2 dir_cols = random(3, 8, rng);
  s.check("concat_cols", {&a, &b}, [&](Tape& t) {
    const Var parts[] = {t.parameter(a), t.parameter(b)};
    return reduce(ag::concat_cols(parts), dir_cols);
  });
  const Array2 mask = binary(3, 4, rng, 0.5);
  s.check("dropout", {&a}, [&](Tape& t) { return reduce(ag::dropout(t.parameter(a), mask, 0.5), dir); });
  // Forward is the identity, so the analytic gradient must be -lambda times the numeric one.
  constexpr double kLambda = 0.7;
  s.check("gradient_reverse", {&a},
          [&](Tape& t) { return reduce(ag::gradient_reverse(t.parameter(a), kLambda), dir); }, -kLambda);
}

void loss_terms(Suite& s) {
  auto& rng = s.rng();
  Parameter logits = s.make("logits", random(5, 3, rng, -2.0, 2.0));
  Parameter disc_s = s.make("disc_src", random(4, 1, rng, -2.0, 2.0));
  Parameter disc_t = s.make("disc_tgt", random(5, 1, rng, -2.0, 2.0));
  Parameter u = s.make("u", random(6, 1, rng, 0.0, 0.3));
  const std::vector<int> labels = {0, 2, 1, 1, 0};
  const std::vector<double> w = {0.5, 1.0, 1.5, 0.2, 0.9};
  const std::vector<double> mu_s = {0.0, 0.3, 1.0, 0.6};
  const std::vector<double> mu_t = {0.1, 0.0, 0.8, 0.4, 0.2};
  const std::vector<double> sel = {1.0, 0.7, 0.2, 0.0, 0.5};
  const Array2 h = binary(5, 3, rng, 0.4);
  const Array2 l = binary(5, 3, rng, 0.4);

  s.check("loss_classifier", {&logits}, [&](Tape& t) {
    return loss_classifier(ag::softmax(t.parameter(logits)), labels, w);
  });
  s.check("loss_adversarial_weighted", {&disc_s, &disc_t}, [&](Tape& t) {
    return loss_adversarial_weighted(ag::sigmoid(t.parameter(disc_s)), ag::sigmoid(t.parameter(disc_t)), mu_s, mu_t);
  });
  s.check("loss_bias", {&u}, [&](Tape& t) { return loss_bias(t.parameter(u)); });
  s.check("loss_pce", {&logits}, [&](Tape& t) { return loss_pce(ag::softmax(t.parameter(logits)), h, sel); });
  s.check("loss_nce", {&logits}, [&](Tape& t) { return loss_nce(ag::softmax(t.parameter(logits)), l, sel); });
}

// The full objective on a small network. Gradient reversal is left out: its
// backward is deliberately not the gradient of any scalar (checked on its own).
void assembled_total(Suite& s) {
  auto& rng = s.rng();
  NetConfig nc;
  nc.input_dim = 2;
  nc.hidden_dim = 6;
  nc.feature_dim = 5;
  nc.disc_hidden = 4;
  nc.classes = 3;
  nc.dropout_rate = 0.5;
  ModelBundle bundle(nc, rng);
  // Nonzero biases keep every unit's kink away from the probe points.
  for (Parameter* p : bundle.parameters()) {
    if (p->name.ends_with(".bias")) p->value = random(p->value.rows(), p->value.cols(), rng, -0.3, 0.3);
  }
  const Array2 xs = random(4, 2, rng, -1.5, 1.5);
  const Array2 xt = random(5, 2, rng, -1.5, 1.5);
  const std::vector<int> ys = {0, 1, 2, 1};
  constexpr int kPasses = 3;
  const Array2 mask_s = bundle.sample_dropout_mask(4, rng);
  const Array2 mask_t = bundle.sample_dropout_mask(5, rng);
  std::vector<Array2> mc_s, mc_t;
  for (int k = 0; k < kPasses; ++k) mc_s.push_back(bundle.sample_dropout_mask(4, rng));
  for (int k = 0; k < kPasses; ++k) mc_t.push_back(bundle.sample_dropout_mask(5, rng));
  const std::vector<double> mu_s = {0.2, 0.0, 0.9, 0.4};
  const std::vector<double> mu_t = {1.0, 0.3, 0.0, 0.5, 0.7};
  const std::vector<double> sel = {0.0, 0.7, 1.0, 0.5, 0.3};
  const Array2 h = binary(5, 3, rng, 0.4);
  const Array2 l = binary(5, 3, rng, 0.4);
  const LossWeights weights{0.8, 0.6, 1.0};

  auto graph = [&](Tape& t) {
    Var fs = bundle.features(t, t.constant(xs));
    Var ft = bundle.features(t, t.constant(xt));
    Var l_y = loss_classifier(bundle.classify(t, fs), ys);
    Var l_dom = loss_adversarial_weighted(bundle.discriminate(t, fs, &mask_s), bundle.discriminate(t, ft, &mask_t),
                                          mu_s, mu_t);
    Var l_bias = ag::add(loss_bias(mc_variance_node(t, bundle, fs, mc_s)),
                         loss_bias(mc_variance_node(t, bundle, ft, mc_t)));
    Var g_t = bundle.classify(t, ft);
    return loss_total(l_y, l_dom, l_bias, loss_pce(g_t, h, sel), loss_nce(g_t, l, sel), weights).total;
  };
  s.check("L_total", bundle.parameters(), graph);
  s.check("L_bias (mc variance)", bundle.parameters(), [&](Tape& t) {
    Var fs = bundle.features(t, t.constant(xs));
    return loss_bias(mc_variance_node(t, bundle, fs, mc_s));
  });
}

}  // namespace

std::vector<OpCheck> run_gradient_suite(std::uint64_t seed) {
  Suite s(seed);
  elementwise_ops(s);
  loss_terms(s);
  assembled_total(s);
  return s.take();
}

}  // namespace utep::cli
