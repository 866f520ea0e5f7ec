#include "utep/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace utep {

namespace ag = ndgrad;

namespace {

Array2 weight_column(std::span<const double> w, std::size_t rows, const char* op) {
  if (w.empty()) return Array2(rows, 1, 1.0);
  if (w.size() != rows) {
    throw ag::ShapeError(std::string(op) + ": " + std::to_string(w.size()) + " weights for " +
                         std::to_string(rows) + " rows");
  }
  return Array2::column(w);
}

Array2 one_plus(std::span<const double> mu, std::size_t rows, const char* op) {
  Array2 w = weight_column(mu, rows, op);
  if (mu.empty()) return w;
  for (double& v : w.data()) v += 1.0;
  return w;
}

// mean over rows of (weights * column)
Var weighted_mean(Var column, const Array2& weights) {
  Tape& t = column.tape();
  return ag::scale(ag::sum(ag::mul(column, t.constant(weights))),
                   1.0 / static_cast<double>(column.rows()));
}

}  // namespace

Var loss_classifier(Var probs, std::span<const int> labels, std::span<const double> weights) {
  const std::size_t n = probs.rows();
  const std::size_t c = probs.cols();
  if (n == 0) throw std::invalid_argument("loss_classifier: empty batch");
  if (labels.size() != n) throw ag::ShapeError("loss_classifier: label count does not match batch");
  Array2 onehot(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw std::invalid_argument("loss_classifier: label " + std::to_string(labels[i]) +
                                  " outside [0, " + std::to_string(c) + ")");
    }
    onehot(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  Tape& t = probs.tape();
  Var picked = ag::row_sum(ag::mul(ag::log(probs, kLogFloor), t.constant(onehot)));
  return ag::scale(weighted_mean(picked, weight_column(weights, n, "loss_classifier")), -1.0);
}

Var loss_adversarial_weighted(Var p_src, Var p_tgt, std::span<const double> mu_src,
                              std::span<const double> mu_tgt) {
  if (p_src.rows() == 0 || p_tgt.rows() == 0) {
    throw std::invalid_argument("loss_adversarial_weighted: both domains must be present");
  }
  if (p_src.cols() != 1 || p_tgt.cols() != 1) {
    throw ag::ShapeError("loss_adversarial_weighted: discriminator outputs must be columns");
  }
  Var src = weighted_mean(ag::log(p_src, kLogFloor), one_plus(mu_src, p_src.rows(), "mu_src"));
  Var tgt = weighted_mean(ag::log(ag::one_minus(p_tgt), kLogFloor),
                          one_plus(mu_tgt, p_tgt.rows(), "mu_tgt"));
  return ag::scale(ag::add(src, tgt), -1.0);
}

Var loss_bias(Var u) { return ag::sum(ag::square(u)); }

Var loss_pce(Var probs, const Array2& positive, std::span<const double> s) {
  Tape& t = probs.tape();
  if (probs.rows() == 0) return t.constant(Array2::scalar(0.0));
  ag::require_same_shape(probs.value(), positive, "loss_pce");
  Var ent = ag::mul(probs, ag::log(probs, kLogFloor));
  Var per_row = ag::row_sum(ag::mul(ent, t.constant(positive)));
  return ag::scale(weighted_mean(per_row, weight_column(s, probs.rows(), "loss_pce")), -1.0);
}

Var loss_nce(Var probs, const Array2& negative, std::span<const double> s) {
  Tape& t = probs.tape();
  if (probs.rows() == 0) return t.constant(Array2::scalar(0.0));
  ag::require_same_shape(probs.value(), negative, "loss_nce");
  Var q = ag::one_minus(probs);
  Var ent = ag::mul(q, ag::log(q, kLogFloor));
  Var per_row = ag::row_sum(ag::mul(ent, t.constant(negative)));
  return ag::scale(weighted_mean(per_row, weight_column(s, probs.rows(), "loss_nce")), -1.0);
}

TotalLoss loss_total(Var l_y, Var l_domain, Var l_bias, Var l_pce, Var l_nce,
                     const LossWeights& weights) {
  if (weights.alpha_bias < 0.0 || weights.alpha_tce < 0.0 || weights.alpha_nce < 0.0) {
    throw std::invalid_argument("loss_total: loss weights must be non-negative");
  }
  Var l_adv = ag::add(l_y, l_domain);
  Var l_tce = ag::add(l_pce, ag::scale(l_nce, weights.alpha_nce));
  Var total = ag::add(ag::add(l_adv, ag::scale(l_bias, weights.alpha_bias)),
                      ag::scale(l_tce, weights.alpha_tce));

  TotalLoss out{total, {}};
  LossReport& r = out.report;
  r.l_y = l_y.item();
  r.l_adv_domain = l_domain.item();
  r.l_adv = l_adv.item();
  r.l_bias = l_bias.item();
  r.l_pce = l_pce.item();
  r.l_nce = l_nce.item();
  r.l_tce = l_tce.item();
  r.l_total = total.item();
  r.weights = weights;
  return out;
}

}  // namespace utep
