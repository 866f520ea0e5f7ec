#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "utep/synthdata.hpp"

namespace utep {

enum class Method { SourceOnly, Dann, DannUtep };

std::string method_name(Method m);
Method parse_method(const std::string& name);

/// Raised for unknown keys and invalid values; `key()` names the offender.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  SplitMode mode = SplitMode::Uda;
  Method method = Method::DannUtep;

  int mc_passes = 10;  // K
  double beta = 0.95;
  double gamma = 0.05;
  double dropout = 0.5;
  double alpha_bias = 1.0;
  double alpha_tce = 1.0;
  double alpha_nce = 1.0;
  double warmup_frac = 0.2;

  // Component toggles for the ablation table.
  bool use_siw = true;
  bool use_tiw = true;
  bool use_sbl = true;
  bool use_tbl = true;
  bool use_pce = true;
  bool use_nce = true;

  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch_src = 16;
  std::size_t batch_tgt_unlabeled = 16;
  std::size_t batch_tgt_labeled = 0;
  std::size_t epochs = 200;
  std::uint64_t seed = 1;

  std::size_t hidden_dim = 64;
  std::size_t feature_dim = 32;
  std::size_t disc_hidden = 32;

  std::string dataset = "moons";  // moons | blobs | csv
  std::string data_path;
  std::size_t n_per_domain = 500;
  double rotation_deg = 30.0;
  double translation_x = 0.0;
  double translation_y = 0.0;
  double noise = 0.1;
  std::size_t classes = 3;  // blobs only
  std::size_t dim = 2;      // blobs only
  std::vector<double> shift;
  double sigma = 1.0;
  double radius = 3.0;
  double label_fraction = 0.01;
  std::size_t shots = 0;

  double ratio_clamp = 100.0;
  std::size_t eval_every = 1;
  bool record_timing = false;  // wall_ms column; off keeps metrics.csv reproducible
  std::string out_dir = "runs/default";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Applies `key = value` entries on top of the defaults. Mode-dependent batch
/// defaults (SSDA: 8 source, 8 labeled target, 16 unlabeled target) apply
/// unless the batch keys are given explicitly.
ExperimentConfig parse_config(const ConfigEntries& entries);
/// Reads a flat `key = value` file ('#' starts a comment).
ConfigEntries read_config_entries(const std::filesystem::path& path);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its canonical value text; parse_config(config_entries(c)) == c.
ConfigEntries config_entries(const ExperimentConfig& config);
std::string config_text(const ExperimentConfig& config);

/// Throws ConfigError on inconsistent settings.
void validate_config(const ExperimentConfig& config);

}  // namespace utep
