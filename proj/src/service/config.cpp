#include "prefrank/service/config.hpp"

#include <charconv>
#include <fstream>
#include <json.hpp>
#include <set>

#include "prefrank/error.hpp"

extern char** environ;

namespace prefrank {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& message) { throw Error(ErrorCode::kConfig, message); }

void set_listen(ServiceConfig& c, const std::string& value) {
  const auto colon = value.rfind(':');
  if (colon == std::string::npos || colon == 0) bad("listen must be host:port, got '" + value + "'");
  int port = 0;
  const auto* end = value.data() + value.size();
  auto [p, ec] = std::from_chars(value.data() + colon + 1, end, port);
  if (ec != std::errc() || p != end || port < 0 || port > 65535) bad("invalid port in '" + value + "'");
  c.host = value.substr(0, colon);
  c.port = port;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [p, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || p != end) bad(key + ": not a number: '" + value + "'");
  return out;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.empty() || p.is_absolute() || base.empty() ? p : base / p;
}

void validate(const ServiceConfig& c) {
  if (c.alpha_individual < 0 || c.alpha_field < 0) bad("alpha values must be non-negative");
  if (c.questions_target < 1) bad("questions_target must be at least 1");
  if (c.comparisons_per_venue < 1) bad("comparisons_per_venue must be at least 1");
  if (c.log_path.empty()) bad("log_path must be set");
}

}  // namespace

ServiceConfig parse_service_config(const std::string& text, const fs::path& base_dir,
                                   const std::map<std::string, std::string>& env) {
  ServiceConfig c;
  json j;
  try {
    j = text.empty() ? json::object() : json::parse(text);
  } catch (const json::exception& ex) {
    bad(std::string("config is not valid JSON: ") + ex.what());
  }
  if (!j.is_object()) bad("config must be a JSON object");
  static const std::set<std::string> known = {"data_dir",    "log_path",         "listen",
                                              "seed",        "alpha_individual", "alpha_field",
                                              "questions_target", "comparisons_per_venue", "fields"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) bad("unknown config key '" + key + "'");
    }
    if (j.contains("data_dir")) c.data_dir = resolve(base_dir, j["data_dir"].get<std::string>());
    if (j.contains("log_path")) c.log_path = resolve(base_dir, j["log_path"].get<std::string>());
    if (j.contains("listen")) set_listen(c, j["listen"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("alpha_individual")) c.alpha_individual = j["alpha_individual"].get<double>();
    if (j.contains("alpha_field")) c.alpha_field = j["alpha_field"].get<double>();
    if (j.contains("questions_target")) c.questions_target = j["questions_target"].get<int>();
    if (j.contains("comparisons_per_venue")) c.comparisons_per_venue = j["comparisons_per_venue"].get<int>();
    if (j.contains("fields")) c.fields = j["fields"].get<std::vector<std::string>>();
  } catch (const json::exception& ex) {
    bad(std::string("config value has the wrong type: ") + ex.what());
  }

  auto get = [&](const char* key) -> const std::string* {
    auto it = env.find(key);
    return it == env.end() ? nullptr : &it->second;
  };
  if (auto* v = get("PREFRANK_DATA_DIR")) c.data_dir = *v;
  if (auto* v = get("PREFRANK_LOG_PATH")) c.log_path = *v;
  if (auto* v = get("PREFRANK_LISTEN")) set_listen(c, *v);
  if (auto* v = get("PREFRANK_SEED")) c.seed = parse_number<std::uint64_t>("PREFRANK_SEED", *v);
  if (auto* v = get("PREFRANK_ALPHA_INDIVIDUAL")) c.alpha_individual = parse_number<double>("PREFRANK_ALPHA_INDIVIDUAL", *v);
  if (auto* v = get("PREFRANK_ALPHA_FIELD")) c.alpha_field = parse_number<double>("PREFRANK_ALPHA_FIELD", *v);
  if (auto* v = get("PREFRANK_QUESTIONS_TARGET")) c.questions_target = parse_number<int>("PREFRANK_QUESTIONS_TARGET", *v);
  if (auto* v = get("PREFRANK_COMPARISONS_PER_VENUE")) {
    c.comparisons_per_venue = parse_number<int>("PREFRANK_COMPARISONS_PER_VENUE", *v);
  }
  validate(c);
  return c;
}

ServiceConfig load_service_config(const fs::path& path, const std::map<std::string, std::string>& env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot read config file " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_service_config(text, path.parent_path(), env);
}

std::map<std::string, std::string> prefrank_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    if (!entry.starts_with("PREFRANK_")) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return out;
}

std::string service_config_json(const ServiceConfig& c) {
  json j{{"data_dir", c.data_dir.string()},
         {"log_path", c.log_path.string()},
         {"listen", c.host + ":" + std::to_string(c.port)},
         {"seed", c.seed},
         {"alpha_individual", c.alpha_individual},
         {"alpha_field", c.alpha_field},
         {"questions_target", c.questions_target},
         {"comparisons_per_venue", c.comparisons_per_venue},
         {"fields", c.fields}};
  return j.dump();
}

}  // namespace prefrank
