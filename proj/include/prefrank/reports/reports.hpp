#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prefrank/core/types.hpp"

namespace prefrank {

// A comma-separated table. Comment lines are written first, each prefixed
// with "# ".
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string to_csv() const;
};

struct RunManifest {
  std::string subcommand;
  std::string config_json;  // resolved options, keys sorted
  std::string dataset_hash;
  std::uint64_t seed = 0;
  std::string version;

  // "# manifest {...}" on a single line.
  std::string line() const;
};

struct Report {
  Table table;
  std::string resolved_config;  // options after defaults, as compact JSON
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;  // skipped fields and similar notes
};

// Scores table "venue_id,raw,rescaled,normalized,ordinal_rank".
// Options: level (individual|field|global), alpha, respondent, field, loo.
Report fit_report(const Dataset& dataset, const std::string& options_json);

// One table per analysis: accumulation, overlap, topk, agreement, accuracy,
// jif-accuracy, rank-delta, violations, topchoice, regress, tickrate.
// Unknown option keys raise Error(kInvalidArgument); analyses that produce
// no rows raise Error(kNoEligibleComparisons).
Report analyze_report(const Dataset& dataset, const std::string& analysis, const std::string& options_json);

std::vector<std::string> analysis_names();

// Experiments: null (needs a template dataset), convergence, agents. The
// null experiment writes one dataset directory per iteration under
// options.output_dir when given.
Report simulate_report(const std::string& experiment, const std::string& options_json, const Dataset* templ);

std::vector<std::string> experiment_names();

// Percentage with one decimal.
std::string format_percent(double value);

}  // namespace prefrank
