#include <CLI11.hpp>
#include <json.hpp>

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "prefrank/prefrank.h"

namespace {

using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitAnalytic = 3;

int exit_code(int status) {
  switch (status) {
    case PREFRANK_OK:
      return kExitOk;
    case PREFRANK_ERR_NO_ELIGIBLE_COMPARISONS:
    case PREFRANK_ERR_EMPTY_FIELD:
    case PREFRANK_ERR_RANK_DEFICIENT:
    case PREFRANK_ERR_DEGENERATE_LIKELIHOOD:
    case PREFRANK_ERR_SOLVER_DIVERGED:
      return kExitAnalytic;
    case PREFRANK_ERR_INTERNAL:
      return kExitInternal;
    default:
      return kExitInput;
  }
}

int report_failure(int status) {
  const std::string message = prefrank_last_error();
  std::cerr << "prefrank: " << (message.empty() ? prefrank_status_name(status) : message) << "\n";
  return exit_code(status);
}

struct DatasetDeleter {
  void operator()(prefrank_dataset* d) const { prefrank_dataset_free(d); }
};
struct ReportDeleter {
  void operator()(prefrank_report* r) const { prefrank_report_free(r); }
};
using DatasetPtr = std::unique_ptr<prefrank_dataset, DatasetDeleter>;
using ReportPtr = std::unique_ptr<prefrank_report, ReportDeleter>;

std::string take(char* text) {
  std::string out = text ? text : "";
  prefrank_string_free(text);
  return out;
}

struct DataArgs {
  std::string directory;
  std::string venues, comparisons, respondents, publications, citations;

  void attach(CLI::App* app, bool required) {
    auto* dir = app->add_option("--data", directory, "Dataset directory holding the CSV files");
    auto* v = app->add_option("--venues", venues, "venues.csv");
    auto* c = app->add_option("--comparisons", comparisons, "comparisons.csv");
    auto* r = app->add_option("--respondents", respondents, "respondents.csv");
    app->add_option("--publications", publications, "publications.csv");
    app->add_option("--citations", citations, "citations.csv");
    v->needs(c, r)->excludes(dir);
    if (required) {
      auto* group = app->add_option_group("input");
      group->add_option(dir);
      group->add_option(v);
      group->require_option(1);
    }
  }

  bool given() const { return !directory.empty() || !venues.empty(); }

  int load(DatasetPtr& out) const {
    prefrank_dataset* d = nullptr;
    int status;
    if (!directory.empty()) {
      status = prefrank_dataset_load(directory.c_str(), &d);
    } else {
      status = prefrank_dataset_load_files(venues.c_str(), comparisons.c_str(), respondents.c_str(),
                                           publications.empty() ? nullptr : publications.c_str(),
                                           citations.empty() ? nullptr : citations.c_str(), &d);
    }
    out.reset(d);
    return status;
  }
};

// Option values that were given on the command line, keyed by report option.
class OptionSet {
 public:
  template <typename T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(flag, *value, help);
    if constexpr (std::is_same_v<T, std::vector<std::string>> || std::is_same_v<T, std::vector<double>>) {
      opt->delimiter(',');
    }
    entries_.push_back([opt, value, key](json& j) {
      if (opt->count()) j[key] = *value;
    });
  }

  void flag(CLI::App* app, const std::string& flag, const std::string& key, bool when_set, const std::string& help) {
    auto* opt = app->add_flag(flag, help);
    entries_.push_back([opt, key, when_set](json& j) {
      if (opt->count()) j[key] = when_set;
    });
  }

  json collect() const {
    json j = json::object();
    for (const auto& e : entries_) e(j);
    return j;
  }

 private:
  std::vector<std::function<void(json&)>> entries_;
};

struct Common {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string output;
};

json with_common(json options, const Common& common) {
  if (common.seed) options["seed"] = *common.seed;
  if (common.jobs != 1) options["jobs"] = common.jobs;
  return options;
}

int emit(const std::string& subcommand, prefrank_report* report, const std::string& dataset_hash,
         const Common& common) {
  char* line = nullptr;
  const int status = prefrank_manifest(subcommand.c_str(), prefrank_report_config(report),
                                       dataset_hash.empty() ? nullptr : dataset_hash.c_str(),
                                       prefrank_report_seed(report), &line);
  if (status != PREFRANK_OK) return report_failure(status);
  const std::string text = take(line) + "\n" + prefrank_report_csv(report);
  for (std::size_t i = 0; i < prefrank_report_warning_count(report); ++i) {
    std::cerr << "prefrank: warning: " << prefrank_report_warning(report, i) << "\n";
  }
  if (common.output.empty()) {
    std::cout << text << std::flush;
    return kExitOk;
  }
  std::ofstream out(common.output, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) {
    std::cerr << "prefrank: IO_ERROR: cannot write " << common.output << "\n";
    return kExitInput;
  }
  return kExitOk;
}

int hash_of(const prefrank_dataset* d, std::string& out) {
  char* hex = nullptr;
  const int status = prefrank_dataset_hash(d, &hex);
  out = take(hex);
  return status;
}

using Runner = std::function<prefrank_report*(const prefrank_dataset*, const char*, int&)>;

int run_report(const std::string& subcommand, const DataArgs& data, bool needs_data, const json& options,
               const Common& common, const Runner& runner) {
  DatasetPtr dataset;
  std::string hash;
  if (needs_data || data.given()) {
    if (int s = data.load(dataset); s != PREFRANK_OK) return report_failure(s);
    if (int s = hash_of(dataset.get(), hash); s != PREFRANK_OK) return report_failure(s);
  }
  const std::string text = with_common(options, common).dump();
  int status = PREFRANK_OK;
  ReportPtr report(runner(dataset.get(), text.c_str(), status));
  if (status != PREFRANK_OK) return report_failure(status);
  return emit(subcommand, report.get(), hash, common);
}

int serve(const std::string& config, const json& overrides, const Common& common) {
  json o = overrides;
  if (common.seed) o["seed"] = *common.seed;
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  prefrank_server* server = nullptr;
  const std::string text = o.dump();
  if (int s = prefrank_server_create(config.c_str(), text.c_str(), &server); s != PREFRANK_OK) {
    return report_failure(s);
  }
  char* resolved_text = nullptr;
  prefrank_server_config(server, &resolved_text);
  const std::string resolved = take(resolved_text);
  const auto seed = json::parse(resolved).value("seed", std::uint64_t{0});
  char* line = nullptr;
  prefrank_manifest("serve", resolved.c_str(), nullptr, seed, &line);
  std::cout << take(line) << "\nlistening " << prefrank_server_port(server) << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "prefrank: signal " << sig << ", shutting down\n";
    prefrank_server_stop(server);
  });
  const int status = prefrank_server_run(server);
  waiter.join();
  prefrank_server_free(server);
  if (status != PREFRANK_OK) return report_failure(status);
  std::cerr << "prefrank: event log closed\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference ranking of publication venues from pairwise comparisons"};
  app.set_version_flag("--version", prefrank_version());
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--seed", common.seed, "Random seed recorded in the manifest");
  app.add_option("--jobs", common.jobs, "Worker threads; results do not depend on this")->check(CLI::PositiveNumber);
  app.add_option("-o,--output", common.output, "Write the table to a file instead of standard output");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit SpringRank scores");
  DataArgs fit_data;
  fit_data.attach(fit, true);
  OptionSet fit_options;
  fit_options.add<std::string>(fit, "--level", "level", "individual, field or global");
  fit_options.add<double>(fit, "--alpha", "alpha", "Regularization strength");
  fit_options.add<std::string>(fit, "--respondent", "respondent", "Respondent id");
  fit_options.add<std::string>(fit, "--field", "field", "Field name");
  fit_options.flag(fit, "--loo", "loo", true, "Hold out the respondent's own comparisons");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Run one report over a dataset");
  std::string analysis;
  analyze->add_option("analysis", analysis, "Report name")
      ->required()
      ->check(CLI::IsMember({"accumulation", "overlap", "topk", "agreement", "accuracy", "jif-accuracy", "rank-delta",
                             "violations", "topchoice", "regress", "tickrate"}));
  DataArgs analyze_data;
  analyze_data.attach(analyze, true);
  OptionSet analyze_options;
  analyze_options.add<std::string>(analyze, "--field", "field", "Restrict to one field");
  analyze_options.add<int>(analyze, "--realizations", "realizations", "Accumulation realizations");
  analyze_options.add<double>(analyze, "--min-selection-pct", "min_selection_pct", "Rank-delta selection filter");
  analyze_options.add<int>(analyze, "--k", "k", "Number of popular venues");
  analyze_options.add<std::string>(analyze, "--source", "source", "Accuracy scores: loo, global or jif");
  analyze_options.flag(analyze, "--jif-subset", "jif_subset", true, "Only comparisons between JIF-scored venues");
  analyze_options.add<std::string>(analyze, "--mode", "mode", "Overlap: set-share or any-other");
  analyze_options.add<std::string>(analyze, "--choice", "choice", "Top choice: preference or aspiration");
  analyze_options.add<std::string>(analyze, "--outcome", "outcome", "Regression outcome");
  analyze_options.add<std::vector<std::string>>(analyze, "--covariates", "covariates", "Comma-separated covariates");
  analyze_options.add<std::string>(analyze, "--interval", "interval", "normal or t");
  analyze_options.flag(analyze, "--pooled", "pooled", true, "One regression across the selected fields");
  analyze_options.add<std::string>(analyze, "--permute", "permute", "Covariate permuted within fields");
  analyze_options.add<int>(analyze, "--iterations", "iterations", "Permutation iterations");
  analyze_options.add<std::string>(analyze, "--top5-source", "top5_source", "personal, field or both");
  analyze_options.add<double>(analyze, "--alpha", "alpha", "Consensus regularization strength");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a simulation experiment");
  std::string experiment;
  simulate->add_option("experiment", experiment, "null, convergence or agents")
      ->required()
      ->check(CLI::IsMember({"null", "convergence", "agents"}));
  DataArgs simulate_data;
  simulate_data.attach(simulate, false);
  OptionSet simulate_options;
  simulate_options.add<int>(simulate, "--iterations", "iterations", "Null datasets to generate");
  simulate_options.add<std::string>(simulate, "--output-dir", "output_dir", "Directory for null datasets");
  simulate_options.flag(simulate, "--no-accuracy", "accuracy", false, "Skip null prediction accuracy");
  simulate_options.add<double>(simulate, "--alpha", "alpha", "Consensus regularization strength");
  simulate_options.add<int>(simulate, "--items", "items", "Venues per synthetic session");
  simulate_options.add<int>(simulate, "--sessions", "sessions", "Synthetic sessions");
  simulate_options.add<double>(simulate, "--beta", "beta", "Logistic agent inverse temperature");
  simulate_options.add<double>(simulate, "--indifference", "indifference", "Indifference probability");
  simulate_options.add<std::vector<double>>(simulate, "--fractions", "fractions", "Comma-separated fractions");
  simulate_options.add<int>(simulate, "--shuffles", "shuffles", "Shuffled orders per session");
  simulate_options.add<std::string>(simulate, "--agent", "agent", "transitive, logistic or random");
  simulate_options.flag(simulate, "--continue", "continue", true, "Continue sessions until every pair is asked");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the survey service");
  std::string config_path;
  serve_cmd->add_option("--config", config_path, "Service configuration file")->required();
  OptionSet serve_options;
  serve_options.add<std::string>(serve_cmd, "--listen", "listen", "host:port, overriding the config");
  serve_options.add<std::string>(serve_cmd, "--log-path", "log_path", "Event log, overriding the config");
  serve_options.add<std::string>(serve_cmd, "--data-dir", "data_dir", "Reference dataset, overriding the config");

  // validate
  auto* validate = app.add_subcommand("validate", "Load a dataset and report violations");
  DataArgs validate_data;
  validate_data.attach(validate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (fit->parsed()) {
    return run_report("fit", fit_data, true, fit_options.collect(), common,
                      [](const prefrank_dataset* d, const char* o, int& status) {
                        prefrank_report* r = nullptr;
                        status = prefrank_fit(d, o, &r);
                        return r;
                      });
  }
  if (analyze->parsed()) {
    return run_report("analyze " + analysis, analyze_data, true, analyze_options.collect(), common,
                      [&](const prefrank_dataset* d, const char* o, int& status) {
                        prefrank_report* r = nullptr;
                        status = prefrank_analyze(d, analysis.c_str(), o, &r);
                        return r;
                      });
  }
  if (simulate->parsed()) {
    return run_report("simulate " + experiment, simulate_data, experiment == "null", simulate_options.collect(),
                      common, [&](const prefrank_dataset* d, const char* o, int& status) {
                        prefrank_report* r = nullptr;
                        status = prefrank_simulate(experiment.c_str(), o, d, &r);
                        return r;
                      });
  }
  if (serve_cmd->parsed()) return serve(config_path, serve_options.collect(), common);
  if (validate->parsed()) {
    DatasetPtr dataset;
    if (int s = validate_data.load(dataset); s != PREFRANK_OK) return report_failure(s);
    std::string hash;
    if (int s = hash_of(dataset.get(), hash); s != PREFRANK_OK) return report_failure(s);
    std::size_t venues = 0, respondents = 0, comparisons = 0;
    prefrank_dataset_counts(dataset.get(), &venues, &respondents, &comparisons);
    char* line = nullptr;
    prefrank_manifest("validate", "{}", hash.c_str(), common.seed.value_or(0), &line);
    std::cout << take(line) << "\nvenues,respondents,comparisons\n"
              << venues << "," << respondents << "," << comparisons << "\n";
    return kExitOk;
  }
  return kExitInput;
}
