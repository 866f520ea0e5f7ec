#include "utep/synthdata.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "utep/io.hpp"
#include "utep/ndgrad/rng.hpp"

namespace utep {

using ndgrad::RngStream;

namespace {

struct RowBuilder {
  std::vector<double> data;
  LabeledBatch batch;

  void push(std::span<const double> x, int y, int domain, bool labeled, int id) {
    data.insert(data.end(), x.begin(), x.end());
    batch.y.push_back(y);
    batch.domain.push_back(domain);
    batch.labeled.push_back(labeled);
    batch.id.push_back(id);
  }

  LabeledBatch finish(std::size_t dim) {
    batch.x = Array2(batch.y.size(), dim, std::move(data));
    return std::move(batch);
  }
};

// Class label per row: floor split so class counts differ by at most one, identical across domains.
std::vector<int> balanced_labels(std::size_t n, std::size_t classes, RngStream& rng) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i * classes / n);
  rng.shuffle(labels);
  return labels;
}

std::vector<std::size_t> indices_of_class(const LabeledBatch& b, int c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.y[i] == c) out.push_back(i);
  return out;
}

}  // namespace

DomainPair gen_two_moons_shift(const MoonsParams& p, std::uint64_t seed) {
  if (p.n_per_domain < 4) throw std::invalid_argument("two moons: need at least 4 samples per domain");
  if (!(p.rotation_deg >= 0.0 && p.rotation_deg <= 90.0)) {
    throw std::invalid_argument("two moons: rotation must lie in [0, 90] degrees");
  }
  if (!(p.noise >= 0.0)) throw std::invalid_argument("two moons: noise must be >= 0");

  const double theta = p.rotation_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  constexpr double cx = 0.5, cy = 0.25;

  DomainPair pair;
  pair.classes = 2;
  for (int domain : {kSourceDomain, kTargetDomain}) {
    RngStream rng = RngStream::derive(seed, domain == kSourceDomain ? "moons.source" : "moons.target");
    const std::vector<int> labels = balanced_labels(p.n_per_domain, 2, rng);
    RowBuilder rows;
    for (std::size_t i = 0; i < p.n_per_domain; ++i) {
      const double t = rng.uniform(0.0, std::numbers::pi);
      double x = labels[i] == 0 ? std::cos(t) : 1.0 - std::cos(t);
      double y = labels[i] == 0 ? std::sin(t) : 0.5 - std::sin(t);
      x += p.noise * rng.normal();
      y += p.noise * rng.normal();
      if (domain == kTargetDomain) {
        const double dx = x - cx, dy = y - cy;
        x = cx + ct * dx - st * dy + p.translation_x;
        y = cy + st * dx + ct * dy + p.translation_y;
      }
      const double pt[2] = {x, y};
      const int id = static_cast<int>(i + (domain == kSourceDomain ? 0 : p.n_per_domain));
      rows.push(pt, labels[i], domain, domain == kSourceDomain, id);
    }
    (domain == kSourceDomain ? pair.source : pair.target) = rows.finish(2);
  }
  return pair;
}

std::vector<std::vector<double>> blob_means(const BlobsParams& p) {
  std::vector<std::vector<double>> means(p.classes, std::vector<double>(p.dim, 0.0));
  for (std::size_t c = 0; c < p.classes; ++c) {
    if (p.dim == 1) {
      means[c][0] = p.radius * static_cast<double>(c);
    } else {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(p.classes);
      means[c][0] = p.radius * std::cos(a);
      means[c][1] = p.radius * std::sin(a);
    }
  }
  return means;
}

DomainPair gen_gaussian_blobs(const BlobsParams& p, std::uint64_t seed) {
  if (p.classes < 2) throw std::invalid_argument("blobs: need at least 2 classes");
  if (p.dim == 0) throw std::invalid_argument("blobs: dim must be positive");
  if (!p.shift.empty() && p.shift.size() != p.dim) {
    throw std::invalid_argument("blobs: shift length must equal dim");
  }
  if (!(p.sigma >= 0.0)) throw std::invalid_argument("blobs: sigma must be >= 0");
  if (p.n_per_domain < p.classes) throw std::invalid_argument("blobs: fewer samples than classes");
  const bool zero_shift = std::all_of(p.shift.begin(), p.shift.end(), [](double v) { return v == 0.0; });
  if (p.sigma == 0.0 && zero_shift) spdlog::warn("blobs: sigma = 0 and zero shift give point masses");

  const auto means = blob_means(p);
  DomainPair pair;
  pair.classes = p.classes;
  for (int domain : {kSourceDomain, kTargetDomain}) {
    RngStream rng = RngStream::derive(seed, domain == kSourceDomain ? "blobs.source" : "blobs.target");
    const std::vector<int> labels = balanced_labels(p.n_per_domain, p.classes, rng);
    RowBuilder rows;
    std::vector<double> pt(p.dim);
    for (std::size_t i = 0; i < p.n_per_domain; ++i) {
      const auto& mu = means[static_cast<std::size_t>(labels[i])];
      for (std::size_t k = 0; k < p.dim; ++k) {
        const double offset = (domain == kTargetDomain && !p.shift.empty()) ? p.shift[k] : 0.0;
        pt[k] = mu[k] + offset + p.sigma * rng.normal();
      }
      const int id = static_cast<int>(i + (domain == kSourceDomain ? 0 : p.n_per_domain));
      rows.push(pt, labels[i], domain, domain == kSourceDomain, id);
    }
    (domain == kSourceDomain ? pair.source : pair.target) = rows.finish(p.dim);
  }
  return pair;
}

double blob_density_ratio(const BlobsParams& p, std::span<const double> x) {
  if (x.size() != p.dim) throw std::invalid_argument("blob_density_ratio: dimension mismatch");
  if (p.sigma <= 0.0) throw std::invalid_argument("blob_density_ratio: sigma must be positive");
  const auto means = blob_means(p);
  const double inv2s2 = 1.0 / (2.0 * p.sigma * p.sigma);
  std::vector<double> log_s, log_t;
  for (const auto& mu : means) {
    double ds = 0.0, dt = 0.0;
    for (std::size_t k = 0; k < p.dim; ++k) {
      const double shift = p.shift.empty() ? 0.0 : p.shift[k];
      ds += (x[k] - mu[k]) * (x[k] - mu[k]);
      dt += (x[k] - mu[k] - shift) * (x[k] - mu[k] - shift);
    }
    log_s.push_back(-ds * inv2s2);
    log_t.push_back(-dt * inv2s2);
  }
  auto lse = [](const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    double acc = 0.0;
    for (double e : v) acc += std::exp(e - m);
    return m + std::log(acc);
  };
  return std::exp(lse(log_t) - lse(log_s));
}

DomainSplit make_splits(const DomainPair& pair, const SplitSpec& spec, std::uint64_t seed) {
  pair.source.validate();
  pair.target.validate();
  DomainSplit split;
  split.mode = spec.mode;
  split.classes = pair.classes;
  RngStream rng = RngStream::derive(seed, "splits");

  // Class-stratified reveal of `per_class(c)` labels from `pool`.
  auto stratified = [&](const LabeledBatch& pool, auto per_class, std::vector<std::size_t>& picked,
                        std::vector<std::size_t>& rest) {
    std::vector<bool> chosen(pool.size(), false);
    for (std::size_t c = 0; c < pair.classes; ++c) {
      auto idx = indices_of_class(pool, static_cast<int>(c));
      const std::size_t want = per_class(idx.size());
      if (want > idx.size()) {
        throw std::invalid_argument("make_splits: class " + std::to_string(c) + " has " +
                                    std::to_string(idx.size()) + " samples, need " + std::to_string(want));
      }
      rng.shuffle(idx);
      for (std::size_t k = 0; k < want; ++k) chosen[idx[k]] = true;
    }
    for (std::size_t i = 0; i < pool.size(); ++i) (chosen[i] ? picked : rest).push_back(i);
  };

  switch (spec.mode) {
    case SplitMode::Uda: {
      split.labeled_source = pair.source;
      split.unlabeled_target = pair.target;
      std::fill(split.unlabeled_target.labeled.begin(), split.unlabeled_target.labeled.end(), false);
      break;
    }
    case SplitMode::Ssda: {
      if (spec.shots == 0 && !(spec.label_fraction > 0.0 && spec.label_fraction <= 1.0)) {
        throw std::invalid_argument("make_splits: label_fraction must lie in (0, 1]");
      }
      if (spec.shots * pair.classes > pair.target.size()) {
        throw std::invalid_argument("make_splits: k * C exceeds the target pool");
      }
      split.labeled_source = pair.source;
      std::vector<std::size_t> picked, rest;
      stratified(
          pair.target,
          [&](std::size_t n_class) {
            if (spec.shots > 0) return spec.shots;
            const auto k = static_cast<std::size_t>(std::llround(spec.label_fraction * static_cast<double>(n_class)));
            return std::max<std::size_t>(1, k);
          },
          picked, rest);
      split.labeled_target = pair.target.subset(picked);
      split.unlabeled_target = pair.target.subset(rest);
      std::fill(split.labeled_target.labeled.begin(), split.labeled_target.labeled.end(), true);
      std::fill(split.unlabeled_target.labeled.begin(), split.unlabeled_target.labeled.end(), false);
      break;
    }
    case SplitMode::Ssl: {
      const std::size_t k = spec.shots == 0 ? 3 : spec.shots;
      if (k * pair.classes > pair.source.size()) {
        throw std::invalid_argument("make_splits: k * C exceeds the pool");
      }
      std::vector<std::size_t> picked, rest;
      stratified(pair.source, [&](std::size_t) { return k; }, picked, rest);
      split.labeled_source = pair.source.subset(picked);
      split.unlabeled_target = pair.source.subset(rest);
      std::fill(split.labeled_source.labeled.begin(), split.labeled_source.labeled.end(), true);
      std::fill(split.unlabeled_target.labeled.begin(), split.unlabeled_target.labeled.end(), false);
      std::fill(split.unlabeled_target.domain.begin(), split.unlabeled_target.domain.end(), kTargetDomain);
      break;
    }
  }
  return split;
}

DomainPair balance_upsample(const DomainPair& pair, std::uint64_t seed) {
  if (pair.source.empty() || pair.target.empty()) {
    throw std::invalid_argument("balance_upsample: empty pool");
  }
  if (pair.source.size() == pair.target.size()) return pair;
  DomainPair out = pair;
  LabeledBatch& small = out.source.size() < out.target.size() ? out.source : out.target;
  const std::size_t goal = std::max(out.source.size(), out.target.size());
  RngStream rng = RngStream::derive(seed, "balance");
  std::vector<std::size_t> rows(small.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const std::size_t base = small.size();
  while (rows.size() < goal) rows.push_back(rng.below(base));
  small = small.subset(rows);
  return out;
}

void write_dataset_csv(const std::filesystem::path& path, std::span<const LabeledBatch> parts) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  std::size_t dim = 0;
  for (const auto& p : parts)
    if (!p.empty()) dim = p.dim();
  for (std::size_t k = 0; k < dim; ++k) out << 'x' << k << ',';
  out << "y,domain,labeled\n";
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (double v : p.x.row(i)) out << format_double(v) << ',';
      out << p.y[i] << ',' << p.domain[i] << ',' << (p.labeled[i] ? 1 : 0) << '\n';
    }
  }
}

void write_dataset_csv(const std::filesystem::path& path, const DomainPair& pair) {
  const LabeledBatch parts[] = {pair.source, pair.target};
  write_dataset_csv(path, parts);
}

DomainPair read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset " + path.string() + " is empty");
  const auto header = split(trim(line), ',');
  if (header.size() < 4 || header[header.size() - 3] != "y" || header[header.size() - 2] != "domain" ||
      header.back() != "labeled") {
    throw std::runtime_error("dataset header must be x0,...,y,domain,labeled");
  }
  const std::size_t dim = header.size() - 3;
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[k] != "x" + std::to_string(k)) throw std::runtime_error("bad dataset column " + header[k]);
  }
  RowBuilder src, tgt;
  int max_label = -1;
  std::size_t line_no = 1;
  std::vector<double> x(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": wrong column count");
    }
    try {
      for (std::size_t k = 0; k < dim; ++k) x[k] = parse_double(cells[k]);
      const auto y = static_cast<int>(parse_int(cells[dim]));
      const auto d = static_cast<int>(parse_int(cells[dim + 1]));
      const auto lab = parse_int(cells[dim + 2]);
      if (y < 0) throw std::invalid_argument("label must be >= 0");
      if (d != kSourceDomain && d != kTargetDomain) throw std::invalid_argument("domain must be 0 or 1");
      if (lab != 0 && lab != 1) throw std::invalid_argument("labeled must be 0 or 1");
      max_label = std::max(max_label, y);
      const int id = static_cast<int>(line_no - 2);
      (d == kSourceDomain ? src : tgt).push(x, y, d, lab == 1, id);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  DomainPair pair;
  pair.source = src.finish(dim);
  pair.target = tgt.finish(dim);
  pair.classes = static_cast<std::size_t>(std::max(max_label + 1, 2));
  return pair;
}

std::string split_mode_name(SplitMode mode) {
  switch (mode) {
    case SplitMode::Uda: return "uda";
    case SplitMode::Ssda: return "ssda";
    case SplitMode::Ssl: return "ssl";
  }
  return "uda";
}

SplitMode parse_split_mode(const std::string& name) {
  if (name == "uda") return SplitMode::Uda;
  if (name == "ssda") return SplitMode::Ssda;
  if (name == "ssl") return SplitMode::Ssl;
  throw std::invalid_argument("unknown mode '" + name + "' (expected uda, ssda or ssl)");
}

}  // namespace utep
