#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace prefrank {

struct ServiceConfig {
  std::filesystem::path data_dir;  // reference dataset directory; empty for none
  std::filesystem::path log_path = "events.jsonl";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 0;
  double alpha_individual = 0.0;
  double alpha_field = 20.0;
  int questions_target = 20;
  int comparisons_per_venue = 3;
  std::vector<std::string> fields;  // accepted fields; empty: those of the reference data

  bool operator==(const ServiceConfig&) const = default;
};

// JSON object with keys data_dir, log_path, listen ("host:port"), seed,
// alpha_individual, alpha_field, questions_target, comparisons_per_venue and
// fields. Relative paths resolve against the config file's directory.
// Environment overrides: PREFRANK_DATA_DIR, PREFRANK_LOG_PATH,
// PREFRANK_LISTEN, PREFRANK_SEED, PREFRANK_ALPHA_INDIVIDUAL,
// PREFRANK_ALPHA_FIELD, PREFRANK_QUESTIONS_TARGET,
// PREFRANK_COMPARISONS_PER_VENUE. Throws Error(kConfig).
ServiceConfig parse_service_config(const std::string& text, const std::filesystem::path& base_dir,
                                   const std::map<std::string, std::string>& env = {});
ServiceConfig load_service_config(const std::filesystem::path& path, const std::map<std::string, std::string>& env);

// PREFRANK_* variables of the current process.
std::map<std::string, std::string> prefrank_environment();

std::string service_config_json(const ServiceConfig& config);

}  // namespace prefrank
