#include "utep/theorylab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "utep/ndgrad/rng.hpp"

namespace utep::theory {

using ndgrad::RngStream;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_distribution(const std::vector<double>& p, const char* name) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " has a negative entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument(std::string(name) + " does not sum to 1");
}

std::vector<double> random_distribution(RngStream& rng, std::size_t m) {
  std::vector<double> p(m);
  double total = 0.0;
  for (double& v : p) {
    v = 0.05 + rng.uniform();
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

// Relative slack for inequalities that can hold with equality.
bool leq(double lhs, double rhs) { return lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs)); }

}  // namespace

std::vector<double> DiscreteInstance::true_ratio() const {
  std::vector<double> w(p_s.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = p_s[i] > 0.0 ? p_t[i] / p_s[i] : 0.0;
  return w;
}

void DiscreteInstance::validate() const {
  const std::size_t m = p_s.size();
  if (m == 0 || p_t.size() != m || loss.size() != m || (!w_hat.empty() && w_hat.size() != m)) {
    throw std::invalid_argument("DiscreteInstance: inconsistent sizes");
  }
  check_distribution(p_s, "p_s");
  check_distribution(p_t, "p_t");
  for (std::size_t i = 0; i < m; ++i) {
    if (p_s[i] == 0.0 && p_t[i] > 0.0) {
      throw std::invalid_argument("DiscreteInstance: p_s = 0 where p_t > 0 (ratio undefined)");
    }
    if (loss[i] < 0.0) throw std::invalid_argument("DiscreteInstance: negative loss");
  }
}

IdentityResult check_importance_identity(const DiscreteInstance& inst) {
  inst.validate();
  const auto w = inst.true_ratio();
  IdentityResult r;
  r.lhs = dot(inst.p_t, inst.loss);
  for (std::size_t i = 0; i < w.size(); ++i) r.rhs += inst.p_s[i] * w[i] * inst.loss[i];
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

BoundResult check_bias_bound(const DiscreteInstance& inst) {
  inst.validate();
  if (inst.w_hat.size() != inst.p_s.size()) throw std::invalid_argument("check_bias_bound: w_hat missing");
  const auto w = inst.true_ratio();
  double cross = 0.0, dev2 = 0.0, loss2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = inst.w_hat[i] - w[i];
    cross += inst.p_s[i] * d * inst.loss[i];
    dev2 += inst.p_s[i] * d * d;
    loss2 += inst.p_s[i] * inst.loss[i] * inst.loss[i];
  }
  BoundResult r;
  r.lhs = std::abs(cross);
  r.rhs = 0.5 * (dev2 + loss2);
  r.holds = leq(r.lhs, r.rhs);
  return r;
}

BoundResult ratio_variance_point(double p, double p_hat, double bound_n) {
  const double floor = 1.0 / (bound_n + 1.0);
  if (p < floor || p_hat < floor || p > 1.0 || p_hat > 1.0) {
    throw std::invalid_argument("ratio_variance_point: probabilities outside [1/(N+1), 1]");
  }
  const double diff = p - p_hat;
  BoundResult r;
  const double q = diff / (p * p_hat);
  r.lhs = q * q;
  r.rhs = std::pow(bound_n + 1.0, 4) * diff * diff;
  r.holds = leq(r.lhs, r.rhs);
  return r;
}

GridResult check_ratio_variance_bound(double bound_n, double step) {
  if (!(bound_n >= 0.0) || !(step > 0.0)) throw std::invalid_argument("check_ratio_variance_bound: bad arguments");
  const double floor = 1.0 / (bound_n + 1.0);
  const auto count = static_cast<std::size_t>(std::floor((1.0 - floor) / step)) + 1;
  GridResult g;
  for (std::size_t i = 0; i < count; ++i) {
    const double p = std::min(1.0, floor + static_cast<double>(i) * step);
    for (std::size_t j = 0; j < count; ++j) {
      const double ph = std::min(1.0, floor + static_cast<double>(j) * step);
      const BoundResult r = ratio_variance_point(p, ph, bound_n);
      ++g.points;
      if (r.rhs > 0.0) g.worst_ratio = std::max(g.worst_ratio, r.lhs / r.rhs);
      if (!r.holds) {
        ++g.failures;
        if (!g.first_failure) g.first_failure = std::make_pair(p, ph);
      }
    }
  }
  return g;
}

DecompositionResult check_variance_decomposition(std::span<const double> p, std::span<const double> p_hat,
                                                 std::span<const double> weights) {
  if (p.size() < 2 || p.size() != p_hat.size() || p.size() != weights.size()) {
    throw std::invalid_argument("check_variance_decomposition: need >= 2 paired samples");
  }
  const double ep = dot(weights, p);
  const double eq = dot(weights, p_hat);
  double var_p = 0.0, var_q = 0.0, cov = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dp = p[i] - ep, dq = p_hat[i] - eq;
    var_p += weights[i] * dp * dp;
    var_q += weights[i] * dq * dq;
    cov += weights[i] * dp * dq;
    sq += weights[i] * (p[i] - p_hat[i]) * (p[i] - p_hat[i]);
  }
  DecompositionResult r;
  r.lhs = sq;
  r.rhs = var_p + var_q + (ep - eq) * (ep - eq);
  r.gap = r.lhs - r.rhs;
  r.covariance = cov;
  return r;
}

FinalBoundResult check_final_bound(const AlignedInstance& inst) {
  const std::size_t m = inst.p_ds.size();
  if (m == 0 || inst.p_s.size() != m || inst.p_hat.size() != m) {
    throw std::invalid_argument("check_final_bound: inconsistent sizes");
  }
  const double floor = 1.0 / (inst.bound_n + 1.0);
  if (!(inst.p_aligned > 0.0 && inst.p_aligned <= 1.0)) {
    throw std::invalid_argument("check_final_bound: aligned P outside (0, 1]");
  }
  const double w_true = (1.0 - inst.p_aligned) / inst.p_aligned;
  FinalBoundResult r;
  r.bounded_ratio = inst.p_aligned >= floor;
  double mean_hat = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(inst.p_hat[i] > 0.0 && inst.p_hat[i] <= 1.0)) {
      throw std::invalid_argument("check_final_bound: P^ outside (0, 1]");
    }
    if (inst.p_hat[i] < floor) r.bounded_ratio = false;
    const double w_hat = (1.0 - inst.p_hat[i]) / inst.p_hat[i];
    r.lhs += inst.p_s[i] * (w_hat - w_true) * (w_hat - w_true);
    mean_hat += inst.p_ds[i] * inst.p_hat[i];
    if (inst.p_ds[i] > 0.0) r.density_factor = std::max(r.density_factor, inst.p_s[i] / inst.p_ds[i]);
  }
  double var_hat = 0.0;
  for (std::size_t i = 0; i < m; ++i) var_hat += inst.p_ds[i] * (inst.p_hat[i] - mean_hat) * (inst.p_hat[i] - mean_hat);
  const double bias = inst.p_aligned - mean_hat;
  r.rhs = 2.0 * std::pow(inst.bound_n + 1.0, 4) * (var_hat + bias * bias);
  r.holds = leq(r.lhs, r.rhs);
  r.tightness = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
  return r;
}

nlohmann::json CheckReport::to_json() const {
  nlohmann::json j = {{"name", name},
                      {"trials", trials},
                      {"failures", failures},
                      {"worst_margin", worst_margin},
                      {"tolerance", tolerance}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  if (violation) j["violation"] = *violation;
  return j;
}

namespace {

struct Tracker {
  CheckReport report;
  bool flip = false;

  void record(bool ok, double margin, bool identity, const nlohmann::json& instance) {
    ++report.trials;
    if (identity) {
      report.worst_margin = std::max(report.worst_margin, margin);
    } else {
      report.worst_margin = std::min(report.worst_margin, margin);
    }
    if (flip) ok = !ok;
    if (!ok) {
      ++report.failures;
      if (!report.violation) report.violation = instance;
    }
  }
};

Tracker make_tracker(const std::string& name, const TheoryOptions& opt, bool identity, double tol) {
  Tracker t;
  t.report.name = name;
  t.report.tolerance = tol;
  t.report.worst_margin = identity ? 0.0 : std::numeric_limits<double>::infinity();
  t.flip = opt.flip_check == name;
  return t;
}

CheckReport run_importance_identity(const TheoryOptions& opt) {
  auto t = make_tracker("importance_identity", opt, true, kIdentityTolerance);
  RngStream rng = RngStream::derive(opt.seed, "theory.identity");
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    DiscreteInstance inst;
    const std::size_t m = 2 + rng.below(19);
    inst.p_s = random_distribution(rng, m);
    inst.p_t = trial == 0 ? inst.p_s : random_distribution(rng, m);
    inst.loss.resize(m);
    for (double& l : inst.loss) l = rng.uniform(0.0, 5.0);
    const IdentityResult r = check_importance_identity(inst);
    t.record(r.gap <= kIdentityTolerance, r.gap, true,
             {{"p_s", inst.p_s}, {"p_t", inst.p_t}, {"loss", inst.loss}, {"lhs", r.lhs}, {"rhs", r.rhs}});
  }
  return t.report;
}

CheckReport run_bias_bound(const TheoryOptions& opt) {
  auto t = make_tracker("bias_bound", opt, false, 0.0);
  RngStream rng = RngStream::derive(opt.seed, "theory.bias");
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    DiscreteInstance inst;
    const std::size_t m = 2 + rng.below(19);
    inst.p_s = random_distribution(rng, m);
    inst.p_t = random_distribution(rng, m);
    inst.loss.resize(m);
    for (double& l : inst.loss) l = rng.uniform(0.0, 5.0);
    inst.w_hat = inst.true_ratio();
    if (trial > 0) {
      for (double& w : inst.w_hat) w = rng.uniform(0.0, 5.0);
    }
    const BoundResult r = check_bias_bound(inst);
    t.record(r.holds, r.rhs - r.lhs, false,
             {{"p_s", inst.p_s}, {"p_t", inst.p_t}, {"loss", inst.loss}, {"w_hat", inst.w_hat},
              {"lhs", r.lhs}, {"rhs", r.rhs}});
  }
  return t.report;
}

CheckReport run_ratio_variance(const TheoryOptions& opt) {
  auto t = make_tracker("ratio_variance_bound", opt, false, 0.0);
  RngStream rng = RngStream::derive(opt.seed, "theory.ratio");
  double worst_ratio = 0.0;
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    const double n = rng.uniform(0.1, 20.0);
    const double floor = 1.0 / (n + 1.0);
    const double p = rng.uniform(floor, 1.0);
    const double p_hat = trial == 0 ? p : rng.uniform(floor, 1.0);
    const BoundResult r = ratio_variance_point(p, p_hat, n);
    if (r.rhs > 0.0) worst_ratio = std::max(worst_ratio, r.lhs / r.rhs);
    t.record(r.holds, r.rhs - r.lhs, false, {{"N", n}, {"P", p}, {"P_hat", p_hat}, {"lhs", r.lhs}, {"rhs", r.rhs}});
  }
  // Deterministic grid sweeps at representative bounds.
  std::size_t grid_points = 0;
  for (double n : {0.5, 1.0, 2.0, 4.0, 9.0}) {
    const GridResult g = check_ratio_variance_bound(n, 1e-3);
    grid_points += g.points;
    worst_ratio = std::max(worst_ratio, g.worst_ratio);
    bool ok = g.failures == 0;
    if (t.flip) ok = !ok;
    if (!ok) {
      t.report.failures += std::max<std::size_t>(g.failures, 1);
      nlohmann::json inst = {{"N", n}, {"grid_step", 1e-3}, {"grid_failures", g.failures}};
      if (g.first_failure) inst["first_failure"] = {g.first_failure->first, g.first_failure->second};
      if (!t.report.violation) t.report.violation = inst;
    }
  }
  t.report.extra["grid_points"] = grid_points;
  t.report.extra["worst_ratio"] = worst_ratio;
  return t.report;
}

CheckReport run_variance_decomposition(const TheoryOptions& opt) {
  auto t = make_tracker("variance_decomposition", opt, true, kIdentityTolerance);
  RngStream rng = RngStream::derive(opt.seed, "theory.decomposition");
  double worst_independent = 0.0;
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    std::vector<double> p, q, w;
    const bool independent = trial % 2 == 1;
    if (independent) {
      // Product of two marginals: covariance is zero by construction.
      const std::size_t a = 1 + rng.below(6), b = 1 + rng.below(6);
      std::vector<double> pa(a), qb(b);
      for (double& v : pa) v = rng.uniform();
      for (double& v : qb) v = rng.uniform();
      const auto wa = random_distribution(rng, a);
      const auto wb = random_distribution(rng, b);
      for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j) {
          p.push_back(pa[i]);
          q.push_back(qb[j]);
          w.push_back(wa[i] * wb[j]);
        }
      if (p.size() < 2) {
        p.push_back(pa[0]);
        q.push_back(qb[0]);
        w[0] *= 0.5;
        w.push_back(w[0]);
      }
    } else {
      const std::size_t m = 2 + rng.below(30);
      w = random_distribution(rng, m);
      for (std::size_t i = 0; i < m; ++i) {
        p.push_back(rng.uniform());
        q.push_back(trial == 0 ? p.back() : rng.uniform());
      }
    }
    const DecompositionResult r = check_variance_decomposition(p, q, w);
    const double deviation = std::abs(r.gap + 2.0 * r.covariance);
    bool ok = deviation <= kIdentityTolerance;
    if (independent) {
      worst_independent = std::max(worst_independent, std::abs(r.lhs - r.rhs));
      ok = ok && std::abs(r.lhs - r.rhs) <= kIdentityTolerance;
    }
    t.record(ok, deviation, true,
             {{"P", p}, {"P_hat", q}, {"weights", w}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"gap", r.gap},
              {"covariance", r.covariance}, {"independent", independent}});
  }
  t.report.extra["worst_independent_gap"] = worst_independent;
  return t.report;
}

CheckReport run_final_bound(const TheoryOptions& opt) {
  auto t = make_tracker("final_bound", opt, false, 0.0);
  RngStream rng = RngStream::derive(opt.seed, "theory.final");
  double max_factor = 0.0, max_tightness = 0.0;
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    AlignedInstance inst;
    inst.bound_n = rng.uniform(1.0, 20.0);
    const std::size_t m = 2 + rng.below(19);
    inst.p_ds = random_distribution(rng, m);
    // p_s = p_ds * r / Z with r in [0.6, 1.2] keeps p_s / p_ds <= 2.
    double z = 0.0;
    inst.p_s.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      inst.p_s[i] = inst.p_ds[i] * rng.uniform(0.6, 1.2);
      z += inst.p_s[i];
    }
    for (double& v : inst.p_s) v /= z;
    const double floor = 1.0 / (inst.bound_n + 1.0);
    inst.p_hat.resize(m);
    for (double& v : inst.p_hat) v = trial == 0 ? inst.p_aligned : rng.uniform(floor, 1.0);
    const FinalBoundResult r = check_final_bound(inst);
    max_factor = std::max(max_factor, r.density_factor);
    max_tightness = std::max(max_tightness, r.tightness);
    const bool ok = r.holds && r.density_factor <= 2.0 && r.bounded_ratio;
    t.record(ok, r.rhs - r.lhs, false,
             {{"N", inst.bound_n}, {"p_ds", inst.p_ds}, {"p_s", inst.p_s}, {"P_hat", inst.p_hat},
              {"lhs", r.lhs}, {"rhs", r.rhs}});
  }
  t.report.extra["max_density_factor"] = max_factor;
  t.report.extra["max_tightness"] = max_tightness;
  return t.report;
}

}  // namespace

std::vector<CheckReport> verify_theory(const TheoryOptions& options) {
  if (options.trials == 0) throw std::invalid_argument("verify_theory: trials must be >= 1");
  return {run_importance_identity(options), run_bias_bound(options), run_ratio_variance(options),
          run_variance_decomposition(options), run_final_bound(options)};
}

}  // namespace utep::theory
