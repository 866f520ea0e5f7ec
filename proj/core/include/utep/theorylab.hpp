#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace utep::theory {

/// Finite support with exact expectations. `w_hat` is the estimated ratio;
/// the true ratio is p_t / p_s.
struct DiscreteInstance {
  std::vector<double> p_s;
  std::vector<double> p_t;
  std::vector<double> loss;
  std::vector<double> w_hat;

  std::vector<double> true_ratio() const;
  /// Throws if the distributions are malformed or p_s = 0 where p_t > 0.
  void validate() const;
};

struct IdentityResult {
  double lhs = 0.0;  // E_t[L]
  double rhs = 0.0;  // E_s[w L]
  double gap = 0.0;  // |lhs - rhs|
};

struct BoundResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

/// E_t[L] = E_s[w L] by exact summation.
IdentityResult check_importance_identity(const DiscreteInstance& inst);

/// |E_s[(w^ - w) L]| <= 1/2 (E_s[(w^ - w)^2] + E_s[L^2]).
BoundResult check_bias_bound(const DiscreteInstance& inst);

/// Pointwise ((P - P^) / (P P^))^2 and its bound (N+1)^4 (P - P^)^2.
BoundResult ratio_variance_point(double p, double p_hat, double bound_n);

struct GridResult {
  double worst_ratio = 0.0;  // max lhs / rhs over points with P != P^
  std::size_t points = 0;
  std::size_t failures = 0;
  std::optional<std::pair<double, double>> first_failure;
};

/// Sweeps P, P^ over [1/(N+1), 1] on a grid of spacing `step`.
GridResult check_ratio_variance_bound(double bound_n, double step = 1e-3);

struct DecompositionResult {
  double lhs = 0.0;         // E[(P - P^)^2]
  double rhs = 0.0;         // Var P + Var P^ + (E P - E P^)^2
  double gap = 0.0;         // lhs - rhs
  double covariance = 0.0;  // Cov(P, P^)
};

/// Exact moments of a joint distribution given as weighted pairs.
DecompositionResult check_variance_decomposition(std::span<const double> p,
                                                 std::span<const double> p_hat,
                                                 std::span<const double> weights);

/// Aligned instance: P = p_aligned everywhere, P^ arbitrary in (0, 1].
/// Expectations over the source use p_s; the bound uses p_ds.
struct AlignedInstance {
  std::vector<double> p_ds;
  std::vector<double> p_s;
  std::vector<double> p_hat;
  double p_aligned = 0.5;
  double bound_n = 1.0;
};

struct FinalBoundResult {
  double lhs = 0.0;             // E_{p_s}[(W^ - W)^2]
  double rhs = 0.0;             // 2 (N+1)^4 [Var(P^) + (E P - E P^)^2]
  bool holds = true;
  double tightness = 0.0;       // lhs / rhs (0 when rhs = 0)
  double density_factor = 0.0;  // max p_s / p_ds, must stay <= 2
  bool bounded_ratio = true;    // every P^ and P in [1/(N+1), 1], so w^ <= N
};

/// Exact evaluation for any P^ in (0, 1]. Outside [1/(N+1), 1] the bound's
/// premise fails; `bounded_ratio` says whether it held.
FinalBoundResult check_final_bound(const AlignedInstance& inst);

struct CheckReport {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  /// Inequalities: smallest rhs - lhs seen. Identities: largest |deviation|.
  double worst_margin = 0.0;
  double tolerance = 0.0;
  nlohmann::json extra = nlohmann::json::object();
  std::optional<nlohmann::json> violation;

  nlohmann::json to_json() const;
};

struct TheoryOptions {
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  /// Test hook: name of a check whose comparison is inverted.
  std::string flip_check;
};

inline constexpr double kIdentityTolerance = 1e-12;

/// Runs all five checks. Trial 0 of every check is a degenerate instance.
std::vector<CheckReport> verify_theory(const TheoryOptions& options);

}  // namespace utep::theory
