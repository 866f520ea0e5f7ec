#pragma once

#include <span>
#include <vector>

#include "utep/nets.hpp"

namespace utep {

/// Guard for normalize_mu: below this max(U) every weight is zero.
inline constexpr double kVarianceEpsilon = 1e-12;

struct UncertaintyRecord {
  std::vector<double> u;   // per-sample MC-Dropout variance
  std::vector<double> mu;  // min-max normalized weight
  std::vector<double> s;   // pseudo-label selection weight, 1 - mu
  std::vector<int> domain;
  int passes = 0;
};

/// Population variance (divisor K) of each row across the K columns.
std::vector<double> population_variance(const Array2& outputs);

/// In-graph MC variance over one dropout mask per pass. Returns a rows x 1 node
/// u_i = (1/K) sum_k (p_ik - mean_i)^2, differentiable into G_d and G_f.
Var mc_variance_node(Tape& t, ModelBundle& bundle, Var features, std::span<const Array2> masks);

/// K stochastic discriminator passes with fresh masks drawn from `rng`.
/// Requires K >= 2; with dropout rate 0 returns zeros (and warns).
std::vector<double> mc_variance(const ModelBundle& bundle, const Array2& features, int passes,
                                RngStream& rng);

/// mu_i = (U_i - min U) / max U, or all zeros when max U <= kVarianceEpsilon.
std::vector<double> normalize_mu(std::span<const double> uncertainty);

/// s = 1 - mu.
std::vector<double> selection_weight(std::span<const double> mu);

UncertaintyRecord make_uncertainty_record(std::vector<double> u, std::vector<int> domain, int passes);

}  // namespace utep
