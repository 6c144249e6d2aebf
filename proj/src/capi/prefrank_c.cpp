#include "prefrank/prefrank.h"

#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "prefrank/core/dataset_io.hpp"
#include "prefrank/error.hpp"
#include "prefrank/reports/reports.hpp"
#include "prefrank/service/config.hpp"
#include "prefrank/service/http_server.hpp"
#include "prefrank/service/survey_service.hpp"

#ifndef PREFRANK_VERSION
#define PREFRANK_VERSION "0.0.0"
#endif

struct prefrank_dataset {
  prefrank::Dataset data;
};

struct prefrank_report {
  prefrank::Report report;
  std::string csv;
};

struct prefrank_server {
  prefrank::ServiceConfig config;
  std::unique_ptr<prefrank::SurveyService> service;
  std::unique_ptr<prefrank::HttpServer> http;
};

namespace {

thread_local std::string last_error;

extern "C" const char* prefrank_status_name(int status);

int fail(int status, const std::string& message) {
  last_error = std::string(prefrank_status_name(status)) + ": " + message;
  return status;
}

int status_of(prefrank::ErrorCode code) { return static_cast<int>(code) + 1; }

// Runs `body`, translating exceptions into status codes.
template <typename F>
int guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const prefrank::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    return fail(PREFRANK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PREFRANK_ERR_INTERNAL, e.what());
  }
}

char* duplicate(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

std::string options(const char* json) { return json ? json : ""; }

int null_argument(const char* name) { return fail(PREFRANK_ERR_NULL_ARGUMENT, std::string(name) + " is NULL"); }

int store_report(prefrank::Report report, prefrank_report** out) {
  auto r = std::make_unique<prefrank_report>();
  r->csv = report.table.to_csv();
  r->report = std::move(report);
  *out = r.release();
  return PREFRANK_OK;
}

const std::string kEnvFor[][2] = {
    {"listen", "PREFRANK_LISTEN"},
    {"seed", "PREFRANK_SEED"},
    {"data_dir", "PREFRANK_DATA_DIR"},
    {"log_path", "PREFRANK_LOG_PATH"},
};

std::map<std::string, std::string> environment_with(const char* overrides_json) {
  auto env = prefrank::prefrank_environment();
  const std::string text = options(overrides_json);
  if (text.empty()) return env;
  nlohmann::json overrides;
  try {
    overrides = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw prefrank::Error(prefrank::ErrorCode::kConfig, std::string("overrides: ") + e.what());
  }
  if (!overrides.is_object()) throw prefrank::Error(prefrank::ErrorCode::kConfig, "overrides must be an object");
  for (const auto& [key, value] : overrides.items()) {
    const std::string* variable = nullptr;
    for (const auto& pair : kEnvFor) {
      if (pair[0] == key) variable = &pair[1];
    }
    if (!variable) throw prefrank::Error(prefrank::ErrorCode::kConfig, "unknown override '" + key + "'");
    env[*variable] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return env;
}

}  // namespace

extern "C" {

const char* prefrank_version(void) { return PREFRANK_VERSION; }

const char* prefrank_status_name(int status) {
  switch (status) {
    case PREFRANK_OK: return "OK";
    case PREFRANK_ERR_NULL_ARGUMENT: return "NULL_ARGUMENT";
    case PREFRANK_ERR_BIND: return "BIND";
    case PREFRANK_ERR_INTERNAL: return "INTERNAL";
    default: break;
  }
  if (status >= 1 && status <= status_of(prefrank::ErrorCode::kCorruptLog)) {
    return prefrank::error_code_name(static_cast<prefrank::ErrorCode>(status - 1)).data();
  }
  return "UNKNOWN_STATUS";
}

const char* prefrank_last_error(void) { return last_error.c_str(); }

void prefrank_string_free(char* text) { std::free(text); }

int prefrank_dataset_load(const char* directory, prefrank_dataset** out) {
  if (!directory) return null_argument("directory");
  if (!out) return null_argument("out");
  return guarded([&]() -> int {
    auto d = std::make_unique<prefrank_dataset>();
    d->data = prefrank::load_dataset(prefrank::DatasetPaths::in_directory(directory));
    *out = d.release();
    return PREFRANK_OK;
  });
}

int prefrank_dataset_load_files(const char* venues, const char* comparisons, const char* respondents,
                                const char* publications, const char* citations, prefrank_dataset** out) {
  if (!venues) return null_argument("venues");
  if (!comparisons) return null_argument("comparisons");
  if (!respondents) return null_argument("respondents");
  if (!out) return null_argument("out");
  return guarded([&]() -> int {
    prefrank::DatasetPaths paths{venues, comparisons, respondents, std::nullopt, std::nullopt};
    if (publications) paths.publications = publications;
    if (citations) paths.citations = citations;
    auto d = std::make_unique<prefrank_dataset>();
    d->data = prefrank::load_dataset(paths);
    *out = d.release();
    return PREFRANK_OK;
  });
}

int prefrank_dataset_validate(const prefrank_dataset* dataset, char** violations) {
  if (!dataset) return null_argument("dataset");
  if (!violations) return null_argument("violations");
  return guarded([&]() -> int {
    std::string text;
    for (const auto& v : prefrank::validate(dataset->data)) text += prefrank::to_string(v) + "\n";
    *violations = duplicate(text);
    return PREFRANK_OK;
  });
}

int prefrank_dataset_hash(const prefrank_dataset* dataset, char** hex) {
  if (!dataset) return null_argument("dataset");
  if (!hex) return null_argument("hex");
  return guarded([&]() -> int {
    *hex = duplicate(prefrank::dataset_hash(dataset->data));
    return PREFRANK_OK;
  });
}

int prefrank_dataset_counts(const prefrank_dataset* dataset, size_t* venues, size_t* respondents,
                            size_t* comparisons) {
  if (!dataset) return null_argument("dataset");
  if (venues) *venues = dataset->data.venues.size();
  if (respondents) *respondents = dataset->data.respondents.size();
  if (comparisons) *comparisons = dataset->data.comparisons.size();
  last_error.clear();
  return PREFRANK_OK;
}

int prefrank_dataset_write(const prefrank_dataset* dataset, const char* directory) {
  if (!dataset) return null_argument("dataset");
  if (!directory) return null_argument("directory");
  return guarded([&]() -> int {
    prefrank::write_dataset(dataset->data, directory);
    return PREFRANK_OK;
  });
}

void prefrank_dataset_free(prefrank_dataset* dataset) { delete dataset; }

int prefrank_fit(const prefrank_dataset* dataset, const char* options_json, prefrank_report** out) {
  if (!dataset) return null_argument("dataset");
  if (!out) return null_argument("out");
  return guarded([&]() -> int { return store_report(prefrank::fit_report(dataset->data, options(options_json)), out); });
}

int prefrank_analyze(const prefrank_dataset* dataset, const char* analysis, const char* options_json,
                     prefrank_report** out) {
  if (!dataset) return null_argument("dataset");
  if (!analysis) return null_argument("analysis");
  if (!out) return null_argument("out");
  return guarded(
      [&]() -> int { return store_report(prefrank::analyze_report(dataset->data, analysis, options(options_json)), out); });
}

int prefrank_simulate(const char* experiment, const char* options_json, const prefrank_dataset* template_dataset,
                      prefrank_report** out) {
  if (!experiment) return null_argument("experiment");
  if (!out) return null_argument("out");
  return guarded([&]() -> int {
    const prefrank::Dataset* templ = template_dataset ? &template_dataset->data : nullptr;
    return store_report(prefrank::simulate_report(experiment, options(options_json), templ), out);
  });
}

const char* prefrank_report_csv(const prefrank_report* report) { return report ? report->csv.c_str() : ""; }

const char* prefrank_report_config(const prefrank_report* report) {
  return report ? report->report.resolved_config.c_str() : "";
}

uint64_t prefrank_report_seed(const prefrank_report* report) { return report ? report->report.seed : 0; }

size_t prefrank_report_warning_count(const prefrank_report* report) {
  return report ? report->report.warnings.size() : 0;
}

const char* prefrank_report_warning(const prefrank_report* report, size_t index) {
  if (!report || index >= report->report.warnings.size()) return "";
  return report->report.warnings[index].c_str();
}

void prefrank_report_free(prefrank_report* report) { delete report; }

int prefrank_manifest(const char* subcommand, const char* config_json, const char* dataset_hash, uint64_t seed,
                      char** out) {
  if (!subcommand) return null_argument("subcommand");
  if (!out) return null_argument("out");
  return guarded([&]() -> int {
    prefrank::RunManifest m{subcommand, options(config_json), dataset_hash ? dataset_hash : "", seed,
                            PREFRANK_VERSION};
    try {
      *out = duplicate(m.line());
    } catch (const nlohmann::json::exception& e) {
      throw prefrank::Error(prefrank::ErrorCode::kParse, std::string("config_json: ") + e.what());
    }
    return PREFRANK_OK;
  });
}

int prefrank_server_create(const char* config_path, const char* overrides_json, prefrank_server** out) {
  if (!config_path) return null_argument("config_path");
  if (!out) return null_argument("out");
  return guarded([&]() -> int {
    auto s = std::make_unique<prefrank_server>();
    s->config = prefrank::load_service_config(config_path, environment_with(overrides_json));
    s->service = prefrank::SurveyService::open(s->config);
    s->http = std::make_unique<prefrank::HttpServer>(*s->service);
    if (!s->http->bind(s->config.host, s->config.port)) {
      return fail(PREFRANK_ERR_BIND,
                  "cannot listen on " + s->config.host + ":" + std::to_string(s->config.port));
    }
    *out = s.release();
    return PREFRANK_OK;
  });
}

int prefrank_server_port(const prefrank_server* server) { return server ? server->http->port() : -1; }

int prefrank_server_config(const prefrank_server* server, char** json) {
  if (!server) return null_argument("server");
  if (!json) return null_argument("json");
  return guarded([&]() -> int {
    *json = duplicate(prefrank::service_config_json(server->config));
    return PREFRANK_OK;
  });
}

int prefrank_server_run(prefrank_server* server) {
  if (!server) return null_argument("server");
  return guarded([&]() -> int {
    server->http->listen();
    return PREFRANK_OK;
  });
}

int prefrank_server_stop(prefrank_server* server) {
  if (!server) return null_argument("server");
  return guarded([&]() -> int {
    server->http->stop();
    return PREFRANK_OK;
  });
}

void prefrank_server_free(prefrank_server* server) {
  if (!server) return;
  try {
    server->http->stop();
    server->http.reset();
    server->service->close();
  } catch (...) {
  }
  delete server;
}

}  // extern "C"
