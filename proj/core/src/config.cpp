#include "utep/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "utep/io.hpp"

namespace utep {

std::string method_name(Method m) {
  switch (m) {
    case Method::SourceOnly: return "source_only";
    case Method::Dann: return "dann";
    case Method::DannUtep: return "dann_utep";
  }
  return "dann";
}

Method parse_method(const std::string& name) {
  if (name == "source_only") return Method::SourceOnly;
  if (name == "dann") return Method::Dann;
  if (name == "dann_utep") return Method::DannUtep;
  throw std::invalid_argument("unknown method '" + name + "' (expected source_only, dann or dann_utep)");
}

namespace {

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::size_t parse_count(const std::string& v) {
  const long long n = parse_int(v);
  if (n < 0) throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(n);
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(parse_double(part));
  return out;
}

std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

#define UTEP_DOUBLE(name) \
  { #name, {[](ExperimentConfig& c, const std::string& v) { c.name = parse_double(v); }, \
            [](const ExperimentConfig& c) { return format_double(c.name); }} }
#define UTEP_COUNT(name) \
  { #name, {[](ExperimentConfig& c, const std::string& v) { c.name = parse_count(v); }, \
            [](const ExperimentConfig& c) { return std::to_string(c.name); }} }
#define UTEP_BOOL(name) \
  { #name, {[](ExperimentConfig& c, const std::string& v) { c.name = parse_bool(v); }, \
            [](const ExperimentConfig& c) { return std::string(c.name ? "true" : "false"); }} }
#define UTEP_STRING(name) \
  { #name, {[](ExperimentConfig& c, const std::string& v) { c.name = v; }, \
            [](const ExperimentConfig& c) { return c.name; }} }

// Ordered as echoed.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"mode", {[](ExperimentConfig& c, const std::string& v) { c.mode = parse_split_mode(v); },
                [](const ExperimentConfig& c) { return split_mode_name(c.mode); }}},
      {"method", {[](ExperimentConfig& c, const std::string& v) { c.method = parse_method(v); },
                  [](const ExperimentConfig& c) { return method_name(c.method); }}},
      {"K", {[](ExperimentConfig& c, const std::string& v) { c.mc_passes = static_cast<int>(parse_int(v)); },
             [](const ExperimentConfig& c) { return std::to_string(c.mc_passes); }}},
      UTEP_DOUBLE(beta),
      UTEP_DOUBLE(gamma),
      UTEP_DOUBLE(dropout),
      UTEP_DOUBLE(alpha_bias),
      UTEP_DOUBLE(alpha_tce),
      UTEP_DOUBLE(alpha_nce),
      UTEP_DOUBLE(warmup_frac),
      UTEP_BOOL(use_siw),
      UTEP_BOOL(use_tiw),
      UTEP_BOOL(use_sbl),
      UTEP_BOOL(use_tbl),
      UTEP_BOOL(use_pce),
      UTEP_BOOL(use_nce),
      UTEP_DOUBLE(lr),
      UTEP_DOUBLE(momentum),
      UTEP_COUNT(batch_src),
      UTEP_COUNT(batch_tgt_unlabeled),
      UTEP_COUNT(batch_tgt_labeled),
      UTEP_COUNT(epochs),
      {"seed", {[](ExperimentConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(parse_count(v)); },
                [](const ExperimentConfig& c) { return std::to_string(c.seed); }}},
      UTEP_COUNT(hidden_dim),
      UTEP_COUNT(feature_dim),
      UTEP_COUNT(disc_hidden),
      UTEP_STRING(dataset),
      UTEP_STRING(data_path),
      UTEP_COUNT(n_per_domain),
      UTEP_DOUBLE(rotation_deg),
      UTEP_DOUBLE(translation_x),
      UTEP_DOUBLE(translation_y),
      UTEP_DOUBLE(noise),
      UTEP_COUNT(classes),
      UTEP_COUNT(dim),
      {"shift", {[](ExperimentConfig& c, const std::string& v) { c.shift = parse_list(v); },
                 [](const ExperimentConfig& c) { return list_text(c.shift); }}},
      UTEP_DOUBLE(sigma),
      UTEP_DOUBLE(radius),
      UTEP_DOUBLE(label_fraction),
      UTEP_COUNT(shots),
      UTEP_DOUBLE(ratio_clamp),
      UTEP_COUNT(eval_every),
      UTEP_BOOL(record_timing),
      UTEP_STRING(out_dir),
  };
  return table;
}

#undef UTEP_DOUBLE
#undef UTEP_COUNT
#undef UTEP_BOOL
#undef UTEP_STRING

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields())
    if (name == key) return &field;
  return nullptr;
}

}  // namespace

ExperimentConfig parse_config(const ConfigEntries& entries) {
  ExperimentConfig config;
  std::set<std::string> seen;
  // Mode first so its batch defaults can be overridden by explicit keys.
  for (const auto& [key, value] : entries) {
    if (key != "mode") continue;
    try {
      config.mode = parse_split_mode(value);
    } catch (const std::exception& e) {
      throw ConfigError(key, "config key '" + key + "': " + e.what());
    }
  }
  if (config.mode == SplitMode::Ssda) {
    config.batch_src = 8;
    config.batch_tgt_labeled = 8;
    config.batch_tgt_unlabeled = 16;
  }
  for (const auto& [key, value] : entries) {
    const Field* field = find_field(key);
    if (field == nullptr) throw ConfigError(key, "unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate config key '" + key + "'");
    try {
      field->set(config, value);
    } catch (const std::exception& e) {
      throw ConfigError(key, "config key '" + key + "': " + e.what());
    }
  }
  validate_config(config);
  return config;
}

ConfigEntries read_config_entries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  ConfigEntries entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    std::string_view body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(body), path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(trim(body.substr(0, eq)));
    std::string value(trim(body.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_config_entries(path));
}

ConfigEntries config_entries(const ExperimentConfig& config) {
  ConfigEntries out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(config));
  return out;
}

std::string config_text(const ExperimentConfig& config) {
  std::ostringstream os;
  for (const auto& [k, v] : config_entries(config)) os << k << " = " << v << '\n';
  return os.str();
}

void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& key, const std::string& msg) { throw ConfigError(key, "config key '" + key + "': " + msg); };
  if (c.alpha_bias < 0.0) fail("alpha_bias", "must be >= 0");
  if (c.alpha_tce < 0.0) fail("alpha_tce", "must be >= 0");
  if (c.alpha_nce < 0.0) fail("alpha_nce", "must be >= 0");
  if (!(c.beta > 0.0 && c.beta < 1.0)) fail("beta", "must lie in (0, 1)");
  if (!(c.gamma > 0.0 && c.gamma < c.beta)) fail("gamma", "must satisfy 0 < gamma < beta");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) fail("dropout", "must lie in [0, 1)");
  if (c.method == Method::DannUtep && c.mc_passes < 2) fail("K", "must be >= 2 for dann_utep");
  if (c.mc_passes < 2) fail("K", "must be >= 2");
  if (!(c.warmup_frac >= 0.0 && c.warmup_frac <= 1.0)) fail("warmup_frac", "must lie in [0, 1]");
  if (!(c.lr > 0.0)) fail("lr", "must be > 0");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) fail("momentum", "must lie in [0, 1)");
  if (c.batch_src == 0) fail("batch_src", "must be > 0");
  if (c.batch_tgt_unlabeled == 0) fail("batch_tgt_unlabeled", "must be > 0");
  if (c.mode == SplitMode::Ssda && c.batch_tgt_labeled == 0) fail("batch_tgt_labeled", "must be > 0 in ssda mode");
  if (c.dataset != "moons" && c.dataset != "blobs" && c.dataset != "csv") fail("dataset", "must be moons, blobs or csv");
  if (c.dataset == "csv" && c.data_path.empty()) fail("data_path", "required when dataset = csv");
  if (c.hidden_dim == 0 || c.feature_dim == 0 || c.disc_hidden == 0) fail("hidden_dim", "layer widths must be > 0");
  if (c.eval_every == 0) fail("eval_every", "must be > 0");
  if (!(c.ratio_clamp > 0.0)) fail("ratio_clamp", "must be > 0");
}

}  // namespace utep
