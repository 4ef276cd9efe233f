#include "basisgen/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace basisgen {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "task.id", "task.conditions", "task.sigma", "task.image_size",
      "train.steps", "train.batch", "train.alpha", "train.lambda_l1", "train.lambda_div",
      "train.seed", "train.objective", "train.latent_mode", "train.per_sample_latent",
      "train.plain_sgd", "train.log_every",
      "model.channels", "model.d_channels", "model.d_z", "model.d_h", "model.k_basis",
      "model.ksize", "model.n_stochastic", "model.filtergen",
      "eval.samples", "eval.diversity_samples", "eval.conditions",
      "sweep.k_values", "sweep.include_filtergen",
      "run.version", "run.metrics", "run.checkpoint",
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value, got '" +
                        line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (known_keys().count(key) == 0) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected integer, got '" + it->second + "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected number, got '" + it->second + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + it->second + "'");
}

void Config::set(const std::string& key, const std::string& value) {
  if (known_keys().count(key) == 0) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

RunSetup resolve_run_setup(const Config& cfg) {
  RunSetup setup;

  setup.task = TaskSpec::make(task_from_string(cfg.get_str("task.id", "gmm")));
  setup.task.n_conditions = static_cast<int>(cfg.get_int("task.conditions", 2));
  setup.task.sigma = cfg.get_double("task.sigma", 0.1);
  setup.task.image_size = static_cast<int>(cfg.get_int("task.image_size", 16));
  if (setup.task.sigma <= 0.0) throw ConfigError("task.sigma must be positive");

  TrainingConfig& t = setup.train;
  const bool image_task = setup.task.id != TaskId::gmm;
  t.steps = static_cast<int>(cfg.get_int("train.steps", image_task ? 2000 : 5000));
  t.batch = static_cast<int>(cfg.get_int("train.batch", image_task ? 8 : 64));
  t.alpha = cfg.get_double("train.alpha", image_task ? 2e-4 : 1e-3);
  t.lambda_l1 = cfg.get_double("train.lambda_l1", image_task ? 10.0 : 0.0);
  t.lambda_div = cfg.get_double("train.lambda_div", 0.0);
  t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 1));
  const std::string objective = cfg.get_str("train.objective", "non_saturating");
  if (objective == "saturating") {
    t.objective = Objective::saturating;
  } else if (objective == "non_saturating") {
    t.objective = Objective::non_saturating;
  } else {
    throw ConfigError("train.objective must be saturating|non_saturating");
  }
  const std::string latent_mode = cfg.get_str("train.latent_mode", "per_layer");
  if (latent_mode == "per_layer") {
    t.latent_mode = LatentMode::per_layer;
  } else if (latent_mode == "shared") {
    t.latent_mode = LatentMode::shared;
  } else {
    throw ConfigError("train.latent_mode must be per_layer|shared");
  }
  t.per_sample_latent = cfg.get_bool("train.per_sample_latent", !image_task);
  t.plain_sgd = cfg.get_bool("train.plain_sgd", false);
  t.log_every = static_cast<int>(cfg.get_int("train.log_every", 250));

  t.model.channels = cfg.get_int("model.channels", image_task ? 16 : 32);
  t.model.d_channels = cfg.get_int("model.d_channels", image_task ? 24 : 64);
  t.model.d_z = cfg.get_int("model.d_z", 64);
  t.model.d_h = cfg.get_int("model.d_h", 64);
  t.model.k_basis = cfg.get_int("model.k_basis", 7);
  t.model.ksize = cfg.get_int("model.ksize", 0);
  t.model.n_stochastic = static_cast<int>(cfg.get_int("model.n_stochastic", 2));
  t.model.filtergen = cfg.get_bool("model.filtergen", false);

  t.eval_samples = static_cast<int>(cfg.get_int("eval.samples", image_task ? 64 : 512));
  t.eval_diversity_samples = static_cast<int>(cfg.get_int("eval.diversity_samples", 20));
  t.eval_conditions = static_cast<int>(cfg.get_int("eval.conditions", 8));

  if (t.steps < 1 || t.batch < 1) throw ConfigError("train.steps and train.batch must be >= 1");
  if (t.lambda_l1 < 0.0 || t.lambda_div < 0.0) {
    throw ConfigError("lambda weights must be non-negative");
  }

  if (const char* env_seed = std::getenv("BASISGEN_SEED")) {
    try {
      t.seed = static_cast<std::uint64_t>(std::stoull(env_seed));
    } catch (const std::exception&) {
      throw ConfigError("BASISGEN_SEED must be an integer, got '" + std::string(env_seed) + "'");
    }
  }
  return setup;
}

namespace {

std::string bool_str(bool v) { return v ? "true" : "false"; }

std::string double_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string manifest_text(const RunSetup& setup, const std::string& metrics_path,
                          const std::string& checkpoint_path) {
  const TrainingConfig& t = setup.train;
  std::ostringstream out;
  out << "# basisgen run manifest (resolved configuration)\n";
  out << "run.version = " << version_string() << "\n";
  out << "run.metrics = " << metrics_path << "\n";
  out << "run.checkpoint = " << checkpoint_path << "\n";
  out << "task.id = " << task_to_string(setup.task.id) << "\n";
  out << "task.conditions = " << setup.task.n_conditions << "\n";
  out << "task.sigma = " << double_str(setup.task.sigma) << "\n";
  out << "task.image_size = " << setup.task.image_size << "\n";
  out << "train.steps = " << t.steps << "\n";
  out << "train.batch = " << t.batch << "\n";
  out << "train.alpha = " << double_str(t.alpha) << "\n";
  out << "train.lambda_l1 = " << double_str(t.lambda_l1) << "\n";
  out << "train.lambda_div = " << double_str(t.lambda_div) << "\n";
  out << "train.seed = " << t.seed << "\n";
  out << "train.objective = "
      << (t.objective == Objective::saturating ? "saturating" : "non_saturating") << "\n";
  out << "train.latent_mode = "
      << (t.latent_mode == LatentMode::shared ? "shared" : "per_layer") << "\n";
  out << "train.per_sample_latent = " << bool_str(t.per_sample_latent) << "\n";
  out << "train.plain_sgd = " << bool_str(t.plain_sgd) << "\n";
  out << "train.log_every = " << t.log_every << "\n";
  out << "model.channels = " << t.model.channels << "\n";
  out << "model.d_channels = " << t.model.d_channels << "\n";
  out << "model.d_z = " << t.model.d_z << "\n";
  out << "model.d_h = " << t.model.d_h << "\n";
  out << "model.k_basis = " << t.model.k_basis << "\n";
  out << "model.ksize = " << t.model.ksize << "\n";
  out << "model.n_stochastic = " << t.model.n_stochastic << "\n";
  out << "model.filtergen = " << bool_str(t.model.filtergen) << "\n";
  out << "eval.samples = " << t.eval_samples << "\n";
  out << "eval.diversity_samples = " << t.eval_diversity_samples << "\n";
  out << "eval.conditions = " << t.eval_conditions << "\n";
  return out.str();
}

RunSetup setup_from_manifest(const std::string& manifest_path) {
  return resolve_run_setup(Config::parse_file(manifest_path));
}

std::string version_string() { return "basisgen 0.1.0"; }

}  // namespace basisgen
