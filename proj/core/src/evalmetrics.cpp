#include "utep/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace utep {

double ratio_from_probability(double p_source, double clamp) {
  if (!(p_source > 0.0)) return clamp;
  return std::clamp((1.0 - p_source) / p_source, 0.0, clamp);
}

std::vector<double> density_ratio(const ModelBundle& bundle, const Array2& x, double clamp) {
  const Array2 p = forward_discriminator(bundle, extract_features(bundle, x), nullptr);
  std::vector<double> w(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) w[i] = ratio_from_probability(p(i, 0), clamp);
  return w;
}

double a_distance_from_error(double error) { return std::max(0.0, 2.0 * (1.0 - 2.0 * error)); }

ProxyADistance proxy_a_distance(const Array2& source_features, const Array2& target_features,
                                std::uint64_t seed) {
  constexpr std::size_t kMinPerDomain = 20;
  constexpr int kEpochs = 100;
  constexpr double kLearningRate = 0.05;
  if (source_features.rows() < kMinPerDomain || target_features.rows() < kMinPerDomain) {
    throw std::invalid_argument("proxy_a_distance: need at least 20 samples per domain");
  }
  if (source_features.cols() != target_features.cols()) {
    throw ndgrad::ShapeError("proxy_a_distance: feature widths differ " +
                             source_features.shape_string() + " vs " + target_features.shape_string());
  }
  const std::size_t dim = source_features.cols();
  const std::size_t n = source_features.rows() + target_features.rows();
  auto row = [&](std::size_t i) {
    return i < source_features.rows() ? source_features.row(i)
                                      : target_features.row(i - source_features.rows());
  };
  auto label = [&](std::size_t i) { return i < source_features.rows() ? 1.0 : 0.0; };

  RngStream rng = RngStream::derive(seed, "proxy_a_distance");
  // Split each domain in half so both halves stay balanced.
  std::vector<std::size_t> src(source_features.rows()), tgt(target_features.rows());
  std::iota(src.begin(), src.end(), 0);
  std::iota(tgt.begin(), tgt.end(), source_features.rows());
  rng.shuffle(src);
  rng.shuffle(tgt);
  std::vector<std::size_t> train, test;
  train.insert(train.end(), src.begin(), src.begin() + static_cast<std::ptrdiff_t>(src.size() / 2));
  test.insert(test.end(), src.begin() + static_cast<std::ptrdiff_t>(src.size() / 2), src.end());
  train.insert(train.end(), tgt.begin(), tgt.begin() + static_cast<std::ptrdiff_t>(tgt.size() / 2));
  test.insert(test.end(), tgt.begin() + static_cast<std::ptrdiff_t>(tgt.size() / 2), tgt.end());

  // Standardize with training statistics.
  std::vector<double> mean(dim, 0.0), inv_std(dim, 0.0);
  for (std::size_t i : train)
    for (std::size_t k = 0; k < dim; ++k) mean[k] += row(i)[k];
  for (double& m : mean) m /= static_cast<double>(train.size());
  for (std::size_t i : train)
    for (std::size_t k = 0; k < dim; ++k) inv_std[k] += (row(i)[k] - mean[k]) * (row(i)[k] - mean[k]);
  for (double& s : inv_std) {
    const double sd = std::sqrt(s / static_cast<double>(train.size()));
    s = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  std::vector<double> z(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < dim; ++k) z[i * dim + k] = (row(i)[k] - mean[k]) * inv_std[k];

  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  auto logit = [&](std::size_t i) {
    double a = b;
    for (std::size_t k = 0; k < dim; ++k) a += w[k] * z[i * dim + k];
    return a;
  };
  for (int epoch = 0; epoch < kEpochs; ++epoch) {
    rng.shuffle(train);
    for (std::size_t i : train) {
      const double a = logit(i);
      const double p = a >= 0.0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
      const double g = p - label(i);
      for (std::size_t k = 0; k < dim; ++k) w[k] -= kLearningRate * g * z[i * dim + k];
      b -= kLearningRate * g;
    }
  }
  std::size_t wrong = 0;
  for (std::size_t i : test) {
    const double predicted = logit(i) >= 0.0 ? 1.0 : 0.0;
    if (predicted != label(i)) ++wrong;
  }
  ProxyADistance out;
  out.error = static_cast<double>(wrong) / static_cast<double>(test.size());
  out.distance = a_distance_from_error(out.error);
  return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman: need equal lengths >= 2");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace utep
