#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "utep/nets.hpp"

namespace utep {

inline constexpr double kDefaultRatioClamp = 100.0;

/// (1 - p) / p clamped to [0, clamp]; p <= 0 maps to the clamp.
double ratio_from_probability(double p_source, double clamp = kDefaultRatioClamp);

/// Estimated transferability w^(x) = P(d=0|x) / P(d=1|x) per row of raw
/// inputs x, dropout off. Assumes balanced pools (n_s = n_t).
std::vector<double> density_ratio(const ModelBundle& bundle, const Array2& x,
                                  double clamp = kDefaultRatioClamp);

struct ProxyADistance {
  double distance = 0.0;  // 2 (1 - 2 err), floored at 0
  double error = 0.0;     // held-out domain-classification error
};

/// Trains a fresh logistic probe (100 SGD epochs on standardized features)
/// on a random half of the pooled features and scores the other half.
/// Needs at least 20 rows per domain.
ProxyADistance proxy_a_distance(const Array2& source_features, const Array2& target_features,
                                std::uint64_t seed);

/// 2 (1 - 2 err) floored at 0.
double a_distance_from_error(double error);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace utep
