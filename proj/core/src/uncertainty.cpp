#include "utep/uncertainty.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <stdexcept>

namespace utep {

namespace ag = ndgrad;

std::vector<double> population_variance(const Array2& outputs) {
  const std::size_t k = outputs.cols();
  if (k == 0) throw std::invalid_argument("population_variance: no passes");
  // Shifting by the first pass keeps a constant row at exactly zero; the
  // in-graph route below repeats these operations in the same order.
  const double inv_k = 1.0 / static_cast<double>(k);
  std::vector<double> u(outputs.rows());
  for (std::size_t i = 0; i < outputs.rows(); ++i) {
    const double base = outputs(i, 0);
    double total = 0.0;
    for (std::size_t c = 1; c < k; ++c) total += outputs(i, c) - base;
    const double mean = total * inv_k;
    double acc = mean * mean;
    for (std::size_t c = 1; c < k; ++c) {
      const double d = (outputs(i, c) - base) - mean;
      acc += d * d;
    }
    u[i] = acc * inv_k;
  }
  return u;
}

Var mc_variance_node(Tape& t, ModelBundle& bundle, Var features, std::span<const Array2> masks) {
  if (masks.size() < 2) throw std::invalid_argument("mc_variance: need at least 2 passes");
  const double inv_k = 1.0 / static_cast<double>(masks.size());
  std::vector<Var> passes;
  passes.reserve(masks.size());
  Var hidden = bundle.discriminator_hidden(t, features);
  for (const Array2& m : masks) passes.push_back(bundle.discriminator_head(t, hidden, &m));

  std::vector<Var> shifted;
  for (std::size_t k = 1; k < passes.size(); ++k) shifted.push_back(ag::sub(passes[k], passes[0]));
  Var total = shifted[0];
  for (std::size_t k = 1; k < shifted.size(); ++k) total = ag::add(total, shifted[k]);
  Var mean = ag::scale(total, inv_k);

  Var acc = ag::square(mean);
  for (const Var& d : shifted) acc = ag::add(acc, ag::square(ag::sub(d, mean)));
  return ag::scale(acc, inv_k);
}

std::vector<double> mc_variance(const ModelBundle& bundle, const Array2& features, int passes,
                                RngStream& rng) {
  if (passes < 2) throw std::invalid_argument("mc_variance: K must be >= 2");
  if (bundle.config().dropout_rate == 0.0) {
    spdlog::warn("mc_variance: dropout rate is 0, variance is identically zero");
    return std::vector<double>(features.rows(), 0.0);
  }
  Array2 outputs(features.rows(), static_cast<std::size_t>(passes));
  Tape t;
  const Var hidden = bundle.discriminator_hidden(t, t.constant(features));
  for (int k = 0; k < passes; ++k) {
    const Array2 mask = bundle.sample_dropout_mask(features.rows(), rng);
    const Array2& p = bundle.discriminator_head(t, hidden, &mask).value();
    for (std::size_t i = 0; i < features.rows(); ++i) outputs(i, static_cast<std::size_t>(k)) = p(i, 0);
  }
  return population_variance(outputs);
}

std::vector<double> normalize_mu(std::span<const double> uncertainty) {
  if (uncertainty.empty()) throw std::invalid_argument("normalize_mu: empty uncertainty vector");
  const auto [lo, hi] = std::minmax_element(uncertainty.begin(), uncertainty.end());
  std::vector<double> mu(uncertainty.size(), 0.0);
  if (*hi <= kVarianceEpsilon) return mu;
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = (uncertainty[i] - *lo) / *hi;
  return mu;
}

std::vector<double> selection_weight(std::span<const double> mu) {
  std::vector<double> s(mu.size());
  std::transform(mu.begin(), mu.end(), s.begin(), [](double m) { return 1.0 - m; });
  return s;
}

UncertaintyRecord make_uncertainty_record(std::vector<double> u, std::vector<int> domain, int passes) {
  if (u.size() != domain.size()) throw std::invalid_argument("uncertainty record: length mismatch");
  UncertaintyRecord r;
  r.mu = normalize_mu(u);
  r.s = selection_weight(r.mu);
  r.u = std::move(u);
  r.domain = std::move(domain);
  r.passes = passes;
  return r;
}

}  // namespace utep
