#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "utep/config.hpp"
#include "utep/trainer.hpp"

namespace utep::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // failed checks, failed sweep sub-runs
inline constexpr int kExitConfig = 2;   // unreadable config, unknown key, bad value
inline constexpr int kExitAborted = 3;  // non-finite value during training

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  bool dump_uncertainty = false;
};

/// Loads the config and applies --seed / --out on top of it.
ExperimentConfig resolve_config(const RunOptions& options);

/// Config echo, final and best accuracies, steps, seed and wall time.
nlohmann::ordered_json run_summary(const ExperimentConfig& config, const TrainResult& result);

/// Trains and writes metrics.csv, summary.json and checkpoint.json into the
/// config's out_dir.
int cmd_run(const RunOptions& options, std::ostream& err);

struct AblationVariant {
  std::string name;
  bool siw, tiw, sbl, tbl, pce, nce;
};

/// The seven component settings of the ablation table, from "none" to "full".
const std::vector<AblationVariant>& ablation_variants();

struct SweepOptions {
  std::filesystem::path config;
  std::filesystem::path out = "sweep";
  std::size_t jobs = 1;
  bool ablation = false;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // key=v1,v2,...
};

/// Cartesian product of overrides (times the ablation variants, if asked),
/// one subdirectory per run plus aggregate.csv.
int cmd_sweep(const SweepOptions& options, std::ostream& out, std::ostream& err);

int cmd_verify_theory(std::size_t trials, std::uint64_t seed, const std::string& flip_check,
                      std::ostream& out);

int cmd_gradcheck(std::uint64_t seed, std::ostream& out);

/// Writes the configured dataset pair as CSV to `out`.
int cmd_gen_data(const RunOptions& options, const std::filesystem::path& out, std::ostream& err);

/// Full command line, including subcommand dispatch.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace utep::cli
