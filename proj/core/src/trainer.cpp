#include "utep/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include "utep/evalmetrics.hpp"
#include "utep/io.hpp"
#include "utep/losses.hpp"
#include "utep/pseudo.hpp"
#include "utep/uncertainty.hpp"

namespace utep {

namespace ag = ndgrad;

void SgdMomentum::step(std::span<Parameter* const> params) {
  if (velocity_.empty()) {
    for (const Parameter* p : params) velocity_.emplace_back(p->value.rows(), p->value.cols());
  }
  if (velocity_.size() != params.size()) throw std::invalid_argument("SgdMomentum: parameter list changed");
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    auto v = velocity_[k].data();
    auto w = p.value.data();
    const auto g = std::as_const(p.grad).data();
    if (v.size() != w.size() || g.size() != w.size()) {
      throw ag::ShapeError("SgdMomentum: " + p.name + " changed shape");
    }
    for (double gi : g) {
      if (!std::isfinite(gi)) throw ag::NonFiniteError("SgdMomentum: non-finite gradient in " + p.name);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum_ * v[i] + g[i];
      w[i] -= lr_ * v[i];
    }
  }
}

EpochSampler::EpochSampler(std::size_t pool_size, std::size_t batch_size, RngStream rng)
    : batch_(std::min(batch_size, pool_size)), rng_(std::move(rng)), order_(pool_size) {
  if (pool_size == 0 || batch_size == 0) throw std::invalid_argument("EpochSampler: empty pool or batch");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  reshuffle();
}

void EpochSampler::reshuffle() {
  rng_.shuffle(order_);
  cursor_ = 0;
}

std::vector<std::size_t> EpochSampler::next() {
  if (cursor_ + batch_ > order_.size()) reshuffle();
  std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                               order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_));
  cursor_ += batch_;
  return out;
}

const std::vector<std::string>& MetricsLog::columns() {
  static const std::vector<std::string> cols = {
      "epoch",  "L_y",    "L_adv",   "L_bias",           "L_pce",  "L_nce", "L_total",
      "target_accuracy", "source_accuracy", "mean_u", "mean_mu", "proxy_A_distance", "wall_ms"};
  return cols;
}

std::string MetricsLog::to_csv() const {
  std::ostringstream os;
  const auto& cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const MetricsRow& r : rows) {
    os << r.epoch << ',' << format_double(r.l_y) << ',' << format_double(r.l_adv) << ','
       << format_double(r.l_bias) << ',' << format_double(r.l_pce) << ',' << format_double(r.l_nce) << ','
       << format_double(r.l_total) << ',';
    os << format_double(r.target_accuracy) << ',' << format_double(r.source_accuracy) << ','
       << format_double(r.mean_u) << ',' << format_double(r.mean_mu) << ','
       << format_double(r.proxy_a_distance) << ',' << format_double(r.wall_ms) << '\n';
  }
  return os.str();
}

void MetricsLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metrics " + path.string());
  out << to_csv();
}

DomainPair prepare_data(const ExperimentConfig& c) {
  DomainPair pair;
  if (c.dataset == "moons") {
    pair = gen_two_moons_shift({c.n_per_domain, c.rotation_deg, c.translation_x, c.translation_y, c.noise},
                               c.seed);
  } else if (c.dataset == "blobs") {
    pair = gen_gaussian_blobs({c.classes, c.dim, c.shift, c.sigma, c.radius, c.n_per_domain}, c.seed);
  } else if (c.dataset == "csv") {
    pair = read_dataset_csv(c.data_path);
  } else {
    throw ConfigError("dataset", "config key 'dataset': unknown dataset '" + c.dataset + "'");
  }
  if (pair.source.size() != pair.target.size()) {
    spdlog::info("upsampling pools to equal size ({} source, {} target)", pair.source.size(),
                 pair.target.size());
    pair = balance_upsample(pair, c.seed);
  }
  return pair;
}

DomainSplit prepare_split(const ExperimentConfig& c) {
  return make_splits(prepare_data(c), {c.mode, c.label_fraction, c.shots}, c.seed);
}

NetConfig net_config(const ExperimentConfig& c, std::size_t input_dim, std::size_t classes) {
  NetConfig n;
  n.input_dim = input_dim;
  n.hidden_dim = c.hidden_dim;
  n.feature_dim = c.feature_dim;
  n.disc_hidden = c.disc_hidden;
  n.classes = classes;
  n.dropout_rate = c.dropout;
  return n;
}

double accuracy(const ModelBundle& bundle, const LabeledBatch& pool) {
  if (pool.empty()) throw std::invalid_argument("accuracy: empty evaluation pool");
  const Array2 g = forward_classifier(bundle, pool.x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const auto row = g.row(i);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == pool.y[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(g.rows());
}

double warmup_factor(double progress, double warmup_frac) {
  if (warmup_frac <= 0.0) return 1.0;
  return std::clamp(progress / warmup_frac, 0.0, 1.0);
}

namespace {

struct StepBatch {
  LabeledBatch source;
  LabeledBatch target_labeled;
  LabeledBatch target_unlabeled;
};

struct StepLosses {
  double l_y = 0.0, l_adv = 0.0, l_bias = 0.0, l_pce = 0.0, l_nce = 0.0, l_total = 0.0;

  void add(const LossReport& r) {
    l_y += r.l_y;
    l_adv += r.l_adv;
    l_bias += r.l_bias;
    l_pce += r.l_pce;
    l_nce += r.l_nce;
    l_total += r.l_total;
  }
};

std::vector<int> concat_labels(const LabeledBatch& a, const LabeledBatch& b) {
  std::vector<int> y = a.y;
  y.insert(y.end(), b.y.begin(), b.y.end());
  return y;
}

Var zero(Tape& t) { return t.constant(Array2::scalar(0.0)); }

class Trainer {
 public:
  Trainer(const ExperimentConfig& config, const DomainSplit& split, const TrainOptions& options)
      : c_(config), split_(split), options_(options) {}

  TrainResult run();

 private:
  LossReport step(ModelBundle& bundle, const StepBatch& batch, double progress);
  void evaluate(const ModelBundle& bundle, std::size_t epoch, MetricsRow& row) const;
  void dump_abort(const StepBatch& batch, std::size_t step, const std::string& what) const;

  const ExperimentConfig& c_;
  const DomainSplit& split_;
  const TrainOptions& options_;
  RngStream dropout_rng_{0};
  RngStream mc_rng_{0};
};

TrainResult Trainer::run() {
  validate_config(c_);
  if (split_.labeled_source.empty()) throw std::invalid_argument("train: no labeled source samples");
  if (split_.unlabeled_target.empty()) throw std::invalid_argument("train: no unlabeled target samples");
  const bool ssda = !split_.labeled_target.empty();
  if (ssda && c_.batch_tgt_labeled == 0) {
    throw ConfigError("batch_tgt_labeled", "config key 'batch_tgt_labeled': labeled target present but batch is 0");
  }

  const auto t0 = std::chrono::steady_clock::now();
  RngStream init_rng = RngStream::derive(c_.seed, "init");
  TrainResult result;
  result.bundle = ModelBundle(net_config(c_, split_.labeled_source.dim(), split_.classes), init_rng);
  ModelBundle& bundle = result.bundle;
  const std::vector<Parameter*> params = bundle.parameters();
  SgdMomentum opt(c_.lr, c_.momentum);

  dropout_rng_ = RngStream::derive(c_.seed, "dropout");
  mc_rng_ = RngStream::derive(c_.seed, "mc");
  EpochSampler src_sampler(split_.labeled_source.size(), c_.batch_src, RngStream::derive(c_.seed, "batches", 0));
  EpochSampler tgt_sampler(split_.unlabeled_target.size(), c_.batch_tgt_unlabeled,
                           RngStream::derive(c_.seed, "batches", 1));
  std::optional<EpochSampler> tl_sampler;
  if (ssda) {
    tl_sampler.emplace(split_.labeled_target.size(), c_.batch_tgt_labeled, RngStream::derive(c_.seed, "batches", 2));
  }

  const std::size_t per_epoch =
      (split_.unlabeled_target.size() + c_.batch_tgt_unlabeled - 1) / c_.batch_tgt_unlabeled;
  const std::size_t total = per_epoch * c_.epochs;
  result.steps_per_epoch = per_epoch;
  result.total_steps = total;

  std::size_t global = 0;
  for (std::size_t epoch = 1; epoch <= c_.epochs; ++epoch) {
    const auto e0 = std::chrono::steady_clock::now();
    StepLosses acc;
    for (std::size_t s = 0; s < per_epoch; ++s, ++global) {
      StepBatch batch;
      batch.source = split_.labeled_source.subset(src_sampler.next());
      batch.target_unlabeled = split_.unlabeled_target.subset(tgt_sampler.next());
      if (tl_sampler) batch.target_labeled = split_.labeled_target.subset(tl_sampler->next());
      const double progress = static_cast<double>(global) / static_cast<double>(total);
      try {
        acc.add(step(bundle, batch, progress));
        opt.step(params);
      } catch (const ag::NonFiniteError& e) {
        dump_abort(batch, global, e.what());
        const auto path = options_.dump_dir.empty() ? std::filesystem::path{}
                                                    : options_.dump_dir / "abort_batch.csv";
        throw TrainingAborted("non-finite value at step " + std::to_string(global) + ": " + e.what(), global,
                              path);
      }
      bundle.zero_grad();
    }
    if (epoch % c_.eval_every != 0 && epoch != c_.epochs) continue;
    MetricsRow row;
    row.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(per_epoch);
    row.l_y = acc.l_y * inv;
    row.l_adv = acc.l_adv * inv;
    row.l_bias = acc.l_bias * inv;
    row.l_pce = acc.l_pce * inv;
    row.l_nce = acc.l_nce * inv;
    row.l_total = acc.l_total * inv;
    evaluate(bundle, epoch, row);
    if (row.target_accuracy > result.best_target_accuracy || result.best_epoch == 0) {
      result.best_target_accuracy = row.target_accuracy;
      result.best_epoch = epoch;
    }
    if (c_.record_timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - e0).count();
    }
    spdlog::debug("epoch {} L_total {:.5f} target_acc {:.4f}", epoch, row.l_total, row.target_accuracy);
    result.metrics.rows.push_back(row);
  }
  result.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

LossReport Trainer::step(ModelBundle& bundle, const StepBatch& b, double progress) {
  const bool utep = c_.method == Method::DannUtep;
  const std::size_t ns = b.source.size();
  const std::size_t ntl = b.target_labeled.size();
  const std::size_t ntu = b.target_unlabeled.size();

  Tape t;
  Var f_s = bundle.features(t, t.constant(b.source.x));
  Var f_tu = bundle.features(t, t.constant(b.target_unlabeled.x));
  Var f_tl;
  if (ntl > 0) f_tl = bundle.features(t, t.constant(b.target_labeled.x));

  // Supervised term over every labeled row.
  Var probs_l = bundle.classify(t, f_s);
  std::vector<int> labels = b.source.y;
  if (ntl > 0) {
    const Var parts[] = {probs_l, bundle.classify(t, f_tl)};
    probs_l = ag::concat_rows(parts);
    labels = concat_labels(b.source, b.target_labeled);
  }
  Var l_y = loss_classifier(probs_l, labels);

  // Every target row (labeled or not) counts as domain 0.
  Var f_t = f_tu;
  if (ntl > 0) {
    const Var parts[] = {f_tl, f_tu};
    f_t = ag::concat_rows(parts);
  }
  const double lambda = c_.method == Method::SourceOnly ? 0.0 : grl_lambda(progress);
  const Array2 mask_s = bundle.sample_dropout_mask(ns, dropout_rng_);
  const Array2 mask_t = bundle.sample_dropout_mask(ntl + ntu, dropout_rng_);
  Var p_s = bundle.discriminate(t, f_s, &mask_s, lambda);
  Var p_t = bundle.discriminate(t, f_t, &mask_t, lambda);

  Var l_bias = zero(t), l_pce = zero(t), l_nce = zero(t);
  std::vector<double> mu_src, mu_tgt;
  LossWeights weights;
  if (utep) {
    std::vector<Array2> masks_s, masks_t;
    for (int k = 0; k < c_.mc_passes; ++k) masks_s.push_back(bundle.sample_dropout_mask(ns, mc_rng_));
    for (int k = 0; k < c_.mc_passes; ++k) masks_t.push_back(bundle.sample_dropout_mask(ntl + ntu, mc_rng_));
    Var u_s = mc_variance_node(t, bundle, f_s, masks_s);
    Var u_t = mc_variance_node(t, bundle, f_t, masks_t);

    std::vector<double> u(u_s.value().data().begin(), u_s.value().data().end());
    u.insert(u.end(), u_t.value().data().begin(), u_t.value().data().end());
    const std::vector<double> mu = normalize_mu(u);
    if (c_.use_siw) mu_src.assign(mu.begin(), mu.begin() + static_cast<std::ptrdiff_t>(ns));
    if (c_.use_tiw) mu_tgt.assign(mu.begin() + static_cast<std::ptrdiff_t>(ns), mu.end());

    if (c_.use_sbl && c_.use_tbl) {
      l_bias = ag::add(loss_bias(u_s), loss_bias(u_t));
    } else if (c_.use_sbl) {
      l_bias = loss_bias(u_s);
    } else if (c_.use_tbl) {
      l_bias = loss_bias(u_t);
    }

    if (c_.use_pce || c_.use_nce) {
      // Unlabeled target rows sit at the end of the target block.
      const auto first = mu.begin() + static_cast<std::ptrdiff_t>(ns + ntl);
      const std::vector<double> s = selection_weight(std::span<const double>(&*first, ntu));
      Var probs_u = bundle.classify(t, f_tu);
      const PseudoLabelSet sel = select_pseudo_labels(probs_u.value(), c_.beta, c_.gamma);
      if (c_.use_pce) l_pce = loss_pce(probs_u, sel.positive, s);
      if (c_.use_nce) l_nce = loss_nce(probs_u, sel.negative, s);
    }
    weights.alpha_bias = c_.alpha_bias;
    weights.alpha_tce = c_.alpha_tce * warmup_factor(progress, c_.warmup_frac);
    weights.alpha_nce = c_.alpha_nce;
  } else {
    weights = {0.0, 0.0, 0.0};
  }

  Var l_domain = loss_adversarial_weighted(p_s, p_t, mu_src, mu_tgt);
  TotalLoss total = loss_total(l_y, l_domain, l_bias, l_pce, l_nce, weights);
  t.backward(total.total);
  return total.report;
}

void Trainer::evaluate(const ModelBundle& bundle, std::size_t epoch, MetricsRow& row) const {
  row.target_accuracy = accuracy(bundle, split_.unlabeled_target);
  row.source_accuracy = accuracy(bundle, split_.labeled_source);

  const Array2 fs = extract_features(bundle, split_.labeled_source.x);
  const Array2 ft = extract_features(bundle, split_.unlabeled_target.x);
  Array2 pooled(fs.rows() + ft.rows(), fs.cols());
  std::copy(fs.data().begin(), fs.data().end(), pooled.data().begin());
  std::copy(ft.data().begin(), ft.data().end(), pooled.data().begin() + static_cast<std::ptrdiff_t>(fs.size()));

  RngStream eval_rng = RngStream::derive(c_.seed, "eval", epoch);
  std::vector<double> u = mc_variance(bundle, pooled, c_.mc_passes, eval_rng);
  std::vector<int> domain(split_.labeled_source.domain);
  domain.insert(domain.end(), split_.unlabeled_target.domain.begin(), split_.unlabeled_target.domain.end());
  const UncertaintyRecord rec = make_uncertainty_record(std::move(u), std::move(domain), c_.mc_passes);
  const double n = static_cast<double>(rec.u.size());
  row.mean_u = std::accumulate(rec.u.begin(), rec.u.end(), 0.0) / n;
  row.mean_mu = std::accumulate(rec.mu.begin(), rec.mu.end(), 0.0) / n;

  constexpr std::size_t kMinProxyRows = 20;
  if (fs.rows() >= kMinProxyRows && ft.rows() >= kMinProxyRows) {
    row.proxy_a_distance = proxy_a_distance(fs, ft, RngStream::derive(c_.seed, "proxy_a", epoch).next_u64()).distance;
  } else {
    row.proxy_a_distance = 0.0;
    if (epoch == c_.epochs) spdlog::info("proxy A-distance skipped: pools below {} rows", kMinProxyRows);
  }

  if (!options_.dump_uncertainty || options_.dump_dir.empty()) return;
  std::filesystem::create_directories(options_.dump_dir);
  {
    std::ofstream out(options_.dump_dir / ("uncertainty_epoch" + std::to_string(epoch) + ".csv"), std::ios::binary);
    out << "sample_id,domain,u,mu,s\n";
    std::vector<int> ids(split_.labeled_source.id);
    ids.insert(ids.end(), split_.unlabeled_target.id.begin(), split_.unlabeled_target.id.end());
    for (std::size_t i = 0; i < rec.u.size(); ++i) {
      out << ids[i] << ',' << rec.domain[i] << ',' << format_double(rec.u[i]) << ',' << format_double(rec.mu[i])
          << ',' << format_double(rec.s[i]) << '\n';
    }
  }
  {
    const Array2 g = forward_classifier(bundle, split_.unlabeled_target.x);
    const PseudoLabelSet sel = select_pseudo_labels(g, c_.beta, c_.gamma);
    std::ofstream out(options_.dump_dir / ("pseudo_epoch" + std::to_string(epoch) + ".csv"), std::ios::binary);
    out << "sample_id,argmax,g_max,positive_count,negative_count,s\n";
    const std::size_t offset = fs.rows();
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const auto r = g.row(i);
      const auto best = std::max_element(r.begin(), r.end());
      const auto h = sel.positive.row(i);
      const auto l = sel.negative.row(i);
      out << split_.unlabeled_target.id[i] << ',' << (best - r.begin()) << ',' << format_double(*best) << ','
          << std::accumulate(h.begin(), h.end(), 0.0) << ',' << std::accumulate(l.begin(), l.end(), 0.0) << ','
          << format_double(rec.s[offset + i]) << '\n';
    }
  }
}

void Trainer::dump_abort(const StepBatch& b, std::size_t step, const std::string& what) const {
  spdlog::error("step {}: {}", step, what);
  if (options_.dump_dir.empty()) return;
  std::filesystem::create_directories(options_.dump_dir);
  std::vector<LabeledBatch> parts{b.source, b.target_labeled, b.target_unlabeled};
  std::erase_if(parts, [](const LabeledBatch& p) { return p.empty(); });
  write_dataset_csv(options_.dump_dir / "abort_batch.csv", parts);
}

}  // namespace

TrainResult train(const ExperimentConfig& config, const DomainSplit& split, const TrainOptions& options) {
  return Trainer(config, split, options).run();
}

}  // namespace utep
