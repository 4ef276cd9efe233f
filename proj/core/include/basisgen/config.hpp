#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "basisgen/gan.hpp"
#include "basisgen/tasks.hpp"

namespace basisgen {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Flat key=value file, UTF-8, '#' comments. Keys are validated against the
/// known schema; an unknown key is rejected with its line number.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<inline>");

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

struct RunSetup {
  TrainingConfig train;
  TaskSpec task;
};

/// Resolve a parsed config into typed settings, applying task-dependent
/// defaults (lambda_l1 = 10 on image tasks, 0 on gmm) and the BASISGEN_SEED
/// environment override.
RunSetup resolve_run_setup(const Config& cfg);

/// Resolved snapshot written before training starts; parseable by
/// Config::parse_string so runs can be reloaded exactly.
std::string manifest_text(const RunSetup& setup, const std::string& metrics_path,
                          const std::string& checkpoint_path);

RunSetup setup_from_manifest(const std::string& manifest_path);

std::string version_string();

}  // namespace basisgen
