#pragma once

#include <span>

#include "utep/ndgrad/ops.hpp"

namespace utep {

using ndgrad::Array2;
using ndgrad::Tape;
using ndgrad::Var;

/// Floor applied inside every -log term.
inline constexpr double kLogFloor = 1e-12;

/// Mean over the batch of w_i * (-log g[i, y_i]). Empty weights means all ones.
Var loss_classifier(Var probs, std::span<const int> labels, std::span<const double> weights = {});

/// Uncertainty-weighted domain log-loss:
///   mean_src (1 + mu_i)(-log p_i) + mean_tgt (1 + mu_j)(-log(1 - p_j)).
/// mu enters as a constant. Both domains must be non-empty.
Var loss_adversarial_weighted(Var p_src, Var p_tgt, std::span<const double> mu_src,
                              std::span<const double> mu_tgt);

/// ||u||^2 over a rows x 1 variance node.
Var loss_bias(Var u);

/// mean_i s_i * sum_c h_ic * (-g_ic log g_ic). Returns 0 for an empty batch.
Var loss_pce(Var probs, const Array2& positive, std::span<const double> s);
/// mean_i s_i * sum_c l_ic * (-(1 - g_ic) log(1 - g_ic)).
Var loss_nce(Var probs, const Array2& negative, std::span<const double> s);

struct LossWeights {
  double alpha_bias = 1.0;
  double alpha_tce = 1.0;
  double alpha_nce = 1.0;
};

struct LossReport {
  double l_y = 0.0;
  double l_adv_domain = 0.0;
  double l_adv = 0.0;
  double l_bias = 0.0;
  double l_pce = 0.0;
  double l_nce = 0.0;
  double l_tce = 0.0;
  double l_total = 0.0;
  LossWeights weights;
};

struct TotalLoss {
  Var total;
  LossReport report;
};

/// L = L_adv + alpha_bias L_bias + alpha_tce (L_pce + alpha_nce L_nce), with
/// L_adv = L_y + L_domain. Negative weights are rejected.
TotalLoss loss_total(Var l_y, Var l_domain, Var l_bias, Var l_pce, Var l_nce,
                     const LossWeights& weights);

}  // namespace utep
