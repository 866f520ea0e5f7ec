#include "utep/cli/commands.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "utep/cli/gradsuite.hpp"
#include "utep/io.hpp"
#include "utep/nets.hpp"
#include "utep/theorylab.hpp"

namespace utep::cli {

namespace fs = std::filesystem;

ExperimentConfig resolve_config(const RunOptions& options) {
  if (!fs::exists(options.config)) {
    throw ConfigError("", "config file not found: " + options.config.string());
  }
  ConfigEntries entries = read_config_entries(options.config);
  auto set = [&](const std::string& key, const std::string& value) {
    std::erase_if(entries, [&](const auto& e) { return e.first == key; });
    entries.emplace_back(key, value);
  };
  if (options.seed) set("seed", std::to_string(*options.seed));
  if (options.out) set("out_dir", options.out->string());
  return parse_config(entries);
}

nlohmann::ordered_json run_summary(const ExperimentConfig& config, const TrainResult& result) {
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_entries(config)) cfg[k] = v;

  nlohmann::ordered_json j;
  j["config"] = cfg;
  j["seed"] = config.seed;
  j["method"] = method_name(config.method);
  if (result.metrics.rows.empty()) {
    j["final_target_accuracy"] = nullptr;
    j["final_source_accuracy"] = nullptr;
    j["final_proxy_A_distance"] = nullptr;
  } else {
    const MetricsRow& last = result.metrics.rows.back();
    j["final_target_accuracy"] = last.target_accuracy;
    j["final_source_accuracy"] = last.source_accuracy;
    j["final_proxy_A_distance"] = last.proxy_a_distance;
  }
  j["best_target_accuracy"] = result.best_target_accuracy;
  j["best_epoch"] = result.best_epoch;
  j["total_steps"] = result.total_steps;
  j["wall_time_ms"] = result.wall_time_ms;
  return j;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Trains one configuration and persists its artifacts. Throws on failure.
TrainResult execute(const ExperimentConfig& config, bool dump_uncertainty) {
  const fs::path dir = config.out_dir;
  fs::create_directories(dir);
  const DomainSplit split = prepare_split(config);
  TrainOptions options;
  options.dump_dir = dir / "dumps";
  options.dump_uncertainty = dump_uncertainty;
  TrainResult result = train(config, split, options);
  result.metrics.write_csv(dir / "metrics.csv");
  write_text(dir / "summary.json", run_summary(config, result).dump(2) + "\n");
  save_checkpoint(result.bundle, dir / "checkpoint.json");
  return result;
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = resolve_config(options);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    const TrainResult result = execute(config, options.dump_uncertainty);
    if (!result.metrics.rows.empty()) {
      spdlog::info("{}: final target accuracy {:.4f}, proxy A-distance {:.4f}", config.out_dir,
                   result.metrics.rows.back().target_accuracy, result.metrics.rows.back().proxy_a_distance);
    }
    return kExitOk;
  } catch (const TrainingAborted& e) {
    err << "error: training aborted: " << e.what();
    if (!e.dump_path().empty()) err << " (batch written to " << e.dump_path().string() << ")";
    err << '\n';
    return kExitAborted;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

const std::vector<AblationVariant>& ablation_variants() {
  //                                                  SIW    TIW    SBL    TBL    PCE    NCE
  static const std::vector<AblationVariant> variants = {
      {"none", false, false, false, false, false, false},
      {"weight+bias", true, true, true, true, false, false},
      {"weight+pseudo", true, true, false, false, true, true},
      {"weight+bias+pce", true, true, true, true, true, false},
      {"source_side+pseudo", true, false, true, false, true, true},
      {"no_tbl", true, true, true, false, true, true},
      {"full", true, true, true, true, true, true},
  };
  return variants;
}

namespace {

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

struct SweepJob {
  std::string name;
  std::string variant;
  ConfigEntries assignments;
  ExperimentConfig config;
  std::string status = "pending";
  std::optional<TrainResult> result;
};

SweepAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(text, "sweep override '" + text + "' is not of the form key=v1,v2");
  }
  SweepAxis axis{std::string(trim(text.substr(0, eq))), {}};
  for (const auto& v : split(text.substr(eq + 1), ',')) axis.values.emplace_back(trim(v));
  if (axis.values.empty()) throw ConfigError(axis.key, "sweep override '" + text + "' has no values");
  return axis;
}

std::string dir_safe(std::string s) {
  for (char& c : s) {
    if (c == '/' || c == '\\' || c == ' ' || c == ',') c = '-';
  }
  return s;
}

}  // namespace

int cmd_sweep(const SweepOptions& options, std::ostream& out, std::ostream& err) {
  std::vector<SweepJob> jobs;
  std::vector<std::string> axis_keys;
  try {
    if (!fs::exists(options.config)) throw ConfigError("", "config file not found: " + options.config.string());
    ConfigEntries base = read_config_entries(options.config);
    if (options.seed) {
      std::erase_if(base, [](const auto& e) { return e.first == "seed"; });
      base.emplace_back("seed", std::to_string(*options.seed));
    }
    std::vector<SweepAxis> axes;
    for (const auto& o : options.overrides) axes.push_back(parse_axis(o));
    for (const auto& a : axes) axis_keys.push_back(a.key);

    // Odometer over the override axes.
    std::vector<ConfigEntries> combos{{}};
    for (const auto& axis : axes) {
      std::vector<ConfigEntries> next;
      for (const auto& c : combos) {
        for (const auto& v : axis.values) {
          ConfigEntries e = c;
          e.emplace_back(axis.key, v);
          next.push_back(std::move(e));
        }
      }
      combos = std::move(next);
    }
    std::vector<std::optional<AblationVariant>> variants{std::nullopt};
    if (options.ablation) variants.assign(ablation_variants().begin(), ablation_variants().end());

    for (const auto& variant : variants) {
      for (const auto& combo : combos) {
        SweepJob job;
        ConfigEntries entries = base;
        auto set = [&](const std::string& k, const std::string& v) {
          std::erase_if(entries, [&](const auto& e) { return e.first == k; });
          entries.emplace_back(k, v);
        };
        std::string name;
        if (variant) {
          job.variant = variant->name;
          name = variant->name;
          set("method", "dann_utep");
          const std::pair<const char*, bool> toggles[] = {{"use_siw", variant->siw}, {"use_tiw", variant->tiw},
                                                          {"use_sbl", variant->sbl}, {"use_tbl", variant->tbl},
                                                          {"use_pce", variant->pce}, {"use_nce", variant->nce}};
          for (const auto& [k, on] : toggles) set(k, on ? "true" : "false");
        }
        for (const auto& [k, v] : combo) {
          set(k, v);
          name += (name.empty() ? "" : "_") + k + "=" + v;
        }
        if (name.empty()) name = "base";
        job.name = dir_safe(name);
        set("out_dir", (options.out / job.name).string());
        job.assignments = combo;
        job.config = parse_config(entries);
        jobs.push_back(std::move(job));
      }
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  fs::create_directories(options.out);
  std::atomic<std::size_t> cursor{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = cursor++; i < jobs.size(); i = cursor++) {
      SweepJob& job = jobs[i];
      try {
        job.result = execute(job.config, false);
        job.status = "ok";
      } catch (const std::exception& e) {
        job.status = std::string("failed: ") + e.what();
        std::lock_guard lock(log_mutex);
        err << "sweep run " << job.name << " failed: " << e.what() << '\n';
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(jobs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream agg(options.out / "aggregate.csv", std::ios::binary);
  agg << "run";
  if (options.ablation) agg << ",variant,use_siw,use_tiw,use_sbl,use_tbl,use_pce,use_nce";
  for (const auto& k : axis_keys) agg << ',' << k;
  agg << ",status,final_target_accuracy,final_source_accuracy,final_proxy_A_distance,best_target_accuracy,best_epoch\n";
  std::size_t failures = 0;
  for (const SweepJob& job : jobs) {
    agg << job.name;
    if (options.ablation) {
      const ExperimentConfig& c = job.config;
      agg << ',' << job.variant << ',' << c.use_siw << ',' << c.use_tiw << ',' << c.use_sbl << ',' << c.use_tbl
          << ',' << c.use_pce << ',' << c.use_nce;
    }
    for (const auto& [k, v] : job.assignments) agg << ',' << v;
    std::string status = job.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    agg << ',' << status;
    if (job.result && !job.result->metrics.rows.empty()) {
      const MetricsRow& last = job.result->metrics.rows.back();
      agg << ',' << format_double(last.target_accuracy) << ',' << format_double(last.source_accuracy) << ','
          << format_double(last.proxy_a_distance) << ',' << format_double(job.result->best_target_accuracy) << ','
          << job.result->best_epoch;
    } else {
      agg << ",,,,,";
    }
    agg << '\n';
    if (job.status != "ok") ++failures;
  }
  out << jobs.size() << " runs, " << failures << " failed; aggregate at " << (options.out / "aggregate.csv").string()
      << '\n';
  return failures == 0 ? kExitOk : kExitFailure;
}

int cmd_verify_theory(std::size_t trials, std::uint64_t seed, const std::string& flip_check, std::ostream& out) {
  theory::TheoryOptions options;
  options.trials = trials;
  options.seed = seed;
  options.flip_check = flip_check;
  const auto reports = theory::verify_theory(options);
  std::size_t failures = 0;
  for (const auto& r : reports) {
    out << r.to_json().dump() << '\n';
    failures += r.failures;
  }
  return failures == 0 ? kExitOk : kExitFailure;
}

int cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  constexpr double kThreshold = 1e-4;
  const auto checks = run_gradient_suite(seed);
  double worst = 0.0;
  out << fmt::format("{:<28} {:>8} {:>14} {:>14}\n", "op", "entries", "max_rel_err", "max_abs_grad");
  for (const auto& c : checks) {
    out << fmt::format("{:<28} {:>8} {:>14.3e} {:>14.3e}\n", c.name, c.result.entries_checked,
                       c.result.max_relative_error, c.result.max_abs_analytic);
    worst = std::max(worst, c.result.max_relative_error);
  }
  out << fmt::format("max relative error {:.3e} (threshold {:.0e}): {}\n", worst, kThreshold,
                     worst < kThreshold ? "ok" : "FAILED");
  return worst < kThreshold ? kExitOk : kExitFailure;
}

int cmd_gen_data(const RunOptions& options, const fs::path& out, std::ostream& err) {
  try {
    const ExperimentConfig config = resolve_config(options);
    const DomainPair pair = prepare_data(config);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_dataset_csv(out, pair);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace utep::cli
