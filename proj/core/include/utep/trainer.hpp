#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "utep/config.hpp"
#include "utep/nets.hpp"
#include "utep/synthdata.hpp"

namespace utep {

/// Classical momentum: v <- m v + g, theta <- theta - lr v.
class SgdMomentum {
 public:
  SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  /// Velocity buffers are created on first use, in parameter order.
  void step(std::span<Parameter* const> params);

 private:
  double lr_;
  double momentum_;
  std::vector<Array2> velocity_;
};

/// Walks a shuffled permutation of [0, n) in fixed-size batches, reshuffling
/// whenever the remaining indices cannot fill a batch.
class EpochSampler {
 public:
  EpochSampler(std::size_t pool_size, std::size_t batch_size, RngStream rng);
  std::vector<std::size_t> next();

 private:
  void reshuffle();

  std::size_t batch_;
  RngStream rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

struct MetricsRow {
  std::size_t epoch = 0;  // 1-based
  double l_y = 0.0;
  double l_adv = 0.0;
  double l_bias = 0.0;
  double l_pce = 0.0;
  double l_nce = 0.0;
  double l_total = 0.0;
  double target_accuracy = 0.0;
  double source_accuracy = 0.0;
  double mean_u = 0.0;
  double mean_mu = 0.0;
  double proxy_a_distance = 0.0;
  double wall_ms = 0.0;
};

/// One row per evaluated epoch; losses are means over that epoch's steps.
struct MetricsLog {
  std::vector<MetricsRow> rows;

  static const std::vector<std::string>& columns();
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

/// Non-finite value during a step. The offending batch is written to
/// `dump_path` when a dump directory was configured.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& message, std::size_t step, std::filesystem::path dump_path)
      : std::runtime_error(message), step_(step), dump_path_(std::move(dump_path)) {}
  std::size_t step() const { return step_; }
  const std::filesystem::path& dump_path() const { return dump_path_; }

 private:
  std::size_t step_;
  std::filesystem::path dump_path_;
};

struct TrainOptions {
  /// Receives abort dumps and, with dump_uncertainty, per-epoch
  /// uncertainty_epoch<E>.csv and pseudo_epoch<E>.csv. Empty = no files.
  std::filesystem::path dump_dir;
  bool dump_uncertainty = false;
};

struct TrainResult {
  ModelBundle bundle;
  MetricsLog metrics;
  std::size_t total_steps = 0;
  std::size_t steps_per_epoch = 0;
  double best_target_accuracy = 0.0;
  std::size_t best_epoch = 0;
  double wall_time_ms = 0.0;
};

/// Source/target pools for the configured dataset, upsampled to equal size
/// when they differ.
DomainPair prepare_data(const ExperimentConfig& config);
DomainSplit prepare_split(const ExperimentConfig& config);

NetConfig net_config(const ExperimentConfig& config, std::size_t input_dim, std::size_t classes);

/// Fraction of rows whose argmax g(x) equals the true label. Empty pool throws.
double accuracy(const ModelBundle& bundle, const LabeledBatch& pool);

TrainResult train(const ExperimentConfig& config, const DomainSplit& split,
                  const TrainOptions& options = {});

/// Warm-up factor for the pseudo-label weight: linear from 0 to 1 over the
/// first `warmup_frac` of training.
double warmup_factor(double progress, double warmup_frac);

}  // namespace utep
