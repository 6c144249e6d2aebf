#include "prefrank/reports/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

#include <json.hpp>

#include "prefrank/analytics/consensus.hpp"
#include "prefrank/core/dataset_io.hpp"
#include "prefrank/core/rng.hpp"
#include "prefrank/error.hpp"
#include "prefrank/rank/springrank.hpp"
#include "prefrank/sim/simulation.hpp"
#include "prefrank/stats/ols.hpp"
#include "prefrank/stats/tick_rate.hpp"

namespace prefrank {

using json = nlohmann::json;

namespace {

// Reads option values with defaults, records the resolved value of every key
// read and rejects keys nobody asked for.
class Options {
 public:
  explicit Options(const std::string& text) {
    if (text.empty()) {
      given_ = json::object();
      return;
    }
    try {
      given_ = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, std::string("options: ") + e.what());
    }
    if (!given_.is_object()) throw Error(ErrorCode::kParse, "options must be a JSON object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    T value = std::move(fallback);
    if (auto it = given_.find(key); it != given_.end() && !it->is_null()) {
      try {
        value = it->get<T>();
      } catch (const json::exception&) {
        throw Error(ErrorCode::kInvalidArgument, "option '" + key + "' has the wrong type");
      }
    }
    resolved_[key] = value;
    return value;
  }

  std::string text(const std::string& key, const std::string& fallback = "") { return get<std::string>(key, fallback); }

  int positive(const std::string& key, int fallback) {
    const int v = get<int>(key, fallback);
    if (v < 1) throw Error(ErrorCode::kInvalidArgument, "option '" + key + "' must be positive");
    return v;
  }

  double non_negative(const std::string& key, double fallback) {
    const double v = get<double>(key, fallback);
    if (!(v >= 0)) throw Error(ErrorCode::kInvalidArgument, "option '" + key + "' must be non-negative");
    return v;
  }

  // Worker count: accepted everywhere, left out of the resolved config
  // because results do not depend on it.
  int jobs() {
    silent_.insert("jobs");
    int v = 1;
    if (auto it = given_.find("jobs"); it != given_.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw Error(ErrorCode::kInvalidArgument, "option 'jobs' has the wrong type");
      v = it->get<int>();
    }
    if (v < 1) throw Error(ErrorCode::kInvalidArgument, "option 'jobs' must be positive");
    return v;
  }

  std::string finish() const {
    for (const auto& [key, _] : given_.items()) {
      if (!resolved_.contains(key) && !silent_.count(key)) throw Error(ErrorCode::kInvalidArgument, "unknown option '" + key + "'");
    }
    return resolved_.dump();
  }

 private:
  json given_;
  json resolved_ = json::object();
  std::set<std::string> silent_;
};

std::string real(double v) { return format_real(v); }

std::string real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

std::string count(std::size_t n) { return std::to_string(n); }

bool has_field(const Dataset& dataset, const std::string& field) {
  const auto fields = dataset.fields();
  return std::find(fields.begin(), fields.end(), field) != fields.end();
}

// The requested field, or every field when none is named.
std::vector<std::string> target_fields(const Dataset& dataset, const std::string& field) {
  if (field.empty()) return dataset.fields();
  if (!has_field(dataset, field)) throw Error(ErrorCode::kUnknownField, "no respondents in field '" + field + "'");
  return {field};
}

bool skippable(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyField:
    case ErrorCode::kNoEligibleComparisons:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kRankDeficient:
    case ErrorCode::kNotFound:
      return true;
    default:
      return false;
  }
}

// Runs `body` per field. A failing field is skipped with a warning only when
// every field was requested.
void for_each_field(const Dataset& dataset, const std::string& field, Report& report,
                    const std::function<void(const std::string&)>& body) {
  const bool all = field.empty();
  for (const auto& f : target_fields(dataset, field)) {
    try {
      body(f);
    } catch (const Error& e) {
      if (!all || !skippable(e.code())) throw;
      report.warnings.push_back("field '" + f + "' skipped: " + e.what());
    }
  }
}

void require_rows(const Report& report, const std::string& what) {
  if (!report.table.rows.empty()) return;
  std::string message = what + " produced no rows";
  for (const auto& w : report.warnings) message += "; " + w;
  throw Error(ErrorCode::kNoEligibleComparisons, message);
}

RankConfig consensus_config(Options& o) {
  RankConfig c = RankConfig::field();
  c.alpha = o.non_negative("alpha", c.alpha);
  return c;
}

void accumulation(const Dataset& d, Options& o, Report& r) {
  const auto field = o.text("field");
  const int realizations = o.positive("realizations", 100);
  const auto seed = o.get<std::uint64_t>("seed", 0);
  r.seed = seed;
  r.table.columns = {"field", "k", "mean_unique", "stddev_unique"};
  for_each_field(d, field, r, [&](const std::string& f) {
    const auto curve = accumulation_curve(d, f, realizations, seed);
    for (std::size_t i = 0; i < curve.k_values.size(); ++i) {
      r.table.add_row({f, std::to_string(curve.k_values[i]), real(curve.mean_unique[i]), real(curve.stddev_unique[i])});
    }
  });
}

OverlapMode parse_overlap_mode(const std::string& token) {
  if (token == "set-share") return OverlapMode::kSetShare;
  if (token == "any-other") return OverlapMode::kAnyOther;
  throw Error(ErrorCode::kInvalidArgument, "unknown overlap mode '" + token + "'");
}

void per_respondent_rows(Report& r, const std::string& field, const std::map<std::string, double>& values,
                         double mean) {
  for (const auto& [id, v] : values) r.table.add_row({field, id, format_percent(v)});
  r.table.add_row({field, "mean", format_percent(mean)});
}

void overlap(const Dataset& d, Options& o, Report& r) {
  const auto field = o.text("field");
  const auto mode = parse_overlap_mode(o.text("mode", "set-share"));
  r.table.columns = {"field", "respondent", "percent"};
  for_each_field(d, field, r, [&](const std::string& f) {
    const auto res = within_field_overlap(d, f, mode);
    per_respondent_rows(r, f, res.per_respondent, res.mean);
  });
}

void topk(const Dataset& d, Options& o, Report& r) {
  const auto field = o.text("field");
  const int k = o.positive("k", 3);
  r.table.columns = {"field", "rank", "venue_id", "percent"};
  for_each_field(d, field, r, [&](const std::string& f) {
    const auto shares = top_k_popularity(d, f, k);
    for (std::size_t i = 0; i < shares.size(); ++i) {
      r.table.add_row({f, std::to_string(i + 1), shares[i].venue, format_percent(shares[i].percent)});
    }
  });
}

void agreement(const Dataset& d, Options& o, Report& r) {
  const auto field = o.text("field");
  const auto config = consensus_config(o);
  r.table.columns = {"field", "respondent", "percent"};
  for_each_field(d, field, r, [&](const std::string& f) {
    const auto res = top5_agreement(d, f, config);
    if (res.per_respondent.empty()) throw Error(ErrorCode::kNoEligibleComparisons, "no respondent has a ranking");
    per_respondent_rows(r, f, res.per_respondent, res.mean);
  });
}

void accuracy_row(Report& r, const std::string& field, ScoreSource source, const AccuracyResult& a) {
  r.table.add_row({field, std::string(score_source_name(source)), format_percent(a.percent), real(a.credit),
                   count(a.eligible), count(a.skipped)});
}

void accuracy(const Dataset& d, Options& o, Report& r, bool jif_comparison) {
  const auto field = o.text("field");
  AccuracyOptions options;
  options.consensus = consensus_config(o);
  options.jobs = o.jobs();
  std::vector<ScoreSource> sources;
  if (jif_comparison) {
    options.jif_subset_only = true;
    sources = {ScoreSource::kLeaveOneOutField, ScoreSource::kJif};
  } else {
    sources = {parse_score_source(o.text("source", "loo"))};
    options.jif_subset_only = o.get<bool>("jif_subset", false);
  }
  r.table.columns = {"field", "source", "percent", "credit", "eligible", "skipped"};
  for_each_field(d, field, r, [&](const std::string& f) {
    std::vector<AccuracyResult> results;
    for (auto s : sources) results.push_back(prediction_accuracy(d, f, s, options));
    for (std::size_t i = 0; i < sources.size(); ++i) accuracy_row(r, f, sources[i], results[i]);
  });
}

void rank_delta(const Dataset& d, Options& o, Report& r) {
  const auto field = o.text("field");
  const double min_pct = o.non_negative("min_selection_pct", 10.0);
  const auto config = consensus_config(o);
  r.table.columns = {"field", "venue_id", "rank_pref", "rank_jif", "diff"};
  for_each_field(d, field, r, [&](const std::string& f) {
    for (const auto& row : ordinal_rank_delta(d, f, min_pct, config)) {
      r.table.add_row({f, row.venue, std::to_string(row.rank_pref), std::to_string(row.rank_jif),
                       std::to_string(row.diff)});
    }
  });
}

void violations(const Dataset& d, Options& o, Report& r) {
  const auto field = o.text("field");
  r.table.columns = {"field",      "respondents", "fully_consistent_percent", "strict", "violations",
                     "violation_percent", "rank_statistic"};
  for_each_field(d, field, r, [&](const std::string& f) {
    const auto s = consistency_summary(d, f);
    if (s.respondents == 0) throw Error(ErrorCode::kNoEligibleComparisons, "no respondent has comparisons");
    r.table.add_row({f, count(s.respondents), format_percent(s.consistent_percent), count(s.strict),
                     count(s.violations), format_percent(s.violation_percent), real(s.rank_statistic)});
  });
}

void topchoice(const Dataset& d, Options& o, Report& r) {
  const auto field = o.text("field");
  const auto choice = parse_choice_type(o.text("choice", "preference"));
  const auto config = consensus_config(o);
  r.table.columns = {"field", "respondent", "choice", "normalized_rank"};
  for_each_field(d, field, r, [&](const std::string& f) {
    for (const auto& id : d.respondents_in_field(f)) {
      try {
        const double v = top_choice_normalized_rank(d, id, choice, config);
        r.table.add_row({f, id, std::string(choice_type_name(choice)), real(v)});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNotFound && e.code() != ErrorCode::kEmptyField) throw;
      }
    }
  });
}

// One row per respondent: outcome, prestige axis, career stage, gender, field.
DataTable regression_table(const Dataset& d, const std::vector<std::string>& fields, const std::string& outcome,
                           Top5Source source, const RankConfig& config) {
  DataTable t;
  t.columns = {"outcome", "prestige", "career_stage", "gender", "field"};
  for (const auto& f : fields) {
    for (const auto& id : d.respondents_in_field(f)) {
      const auto& resp = *d.find_respondent(id);
      Cell y;
      if (outcome == "tickrate") {
        if (auto v = tick_rate(d, id, source, config)) y = *v;
      } else {
        const auto choice = outcome == "topchoice" ? ChoiceType::kTopPreference : ChoiceType::kTopAspiration;
        try {
          y = top_choice_normalized_rank(d, id, choice, config);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNotFound && e.code() != ErrorCode::kEmptyField) throw;
        }
      }
      Cell prestige;
      if (resp.prestige_decile) prestige = prestige_axis(*resp.prestige_decile);
      Cell gender;
      if (resp.gender) gender = std::string(gender_token(*resp.gender));
      t.add_row({y, prestige, std::string(career_stage_token(resp.career_stage)), gender, f});
    }
  }
  return t;
}

std::string permuted_term(const RegressionResult& fit, const std::string& permute) {
  for (const auto& c : fit.coefficients) {
    if (c.term == permute || c.term.rfind(permute + "=", 0) == 0) return c.term;
  }
  throw Error(ErrorCode::kInvalidArgument, "no coefficient for permuted column '" + permute + "'");
}

void regress(const Dataset& d, Options& o, Report& r) {
  const auto field = o.text("field");
  const auto outcome = o.text("outcome", "topchoice");
  if (outcome != "topchoice" && outcome != "topaspiration" && outcome != "tickrate") {
    throw Error(ErrorCode::kInvalidArgument, "unknown outcome '" + outcome + "'");
  }
  const auto source = parse_top5_source(o.text("top5_source", "personal"));
  const auto covariate_names =
      o.get<std::vector<std::string>>("covariates", {"prestige", "career_stage", "gender"});
  const auto interval_token = o.text("interval", "normal");
  if (interval_token != "normal" && interval_token != "t") {
    throw Error(ErrorCode::kInvalidArgument, "interval must be 'normal' or 't'");
  }
  const bool pooled = o.get<bool>("pooled", false);
  const auto permute = o.text("permute");
  const int iterations = o.positive("iterations", 10000);
  const int jobs = o.jobs();
  const auto seed = o.get<std::uint64_t>("seed", 0);
  const auto config = consensus_config(o);
  r.seed = seed;

  RegressionSpec spec;
  spec.outcome = "outcome";
  spec.interval = interval_token == "t" ? IntervalKind::kStudentT : IntervalKind::kNormal;
  spec.reference_levels = {{"career_stage", std::string(career_stage_token(CareerStage::kAssistant))},
                           {"gender", std::string(gender_token(Gender::kMan))}};
  for (const auto& name : covariate_names) {
    if (name == "prestige") {
      spec.covariates.push_back({name, CovariateKind::kContinuous});
    } else if (name == "career_stage" || name == "gender") {
      spec.covariates.push_back({name, CovariateKind::kDummy});
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown covariate '" + name + "'");
    }
  }
  if (!permute.empty() && std::find(covariate_names.begin(), covariate_names.end(), permute) == covariate_names.end()) {
    throw Error(ErrorCode::kInvalidArgument, "permuted column '" + permute + "' is not a covariate");
  }

  r.table.columns = {"field", "outcome", "term", "estimate", "std_error", "ci_low", "ci_high", "p_value", "n",
                     "reference"};
  auto run = [&](const std::string& label, const std::vector<std::string>& fields) {
    const auto table = regression_table(d, fields, outcome, source, config);
    const auto fit = fit_ols(table, spec);
    std::string reference;
    for (const auto& ref : fit.reference_summary) reference += (reference.empty() ? "" : ";") + ref;
    for (const auto& c : fit.coefficients) {
      r.table.add_row({label, outcome, c.term, real(c.estimate), real(c.std_error), real(c.ci_low), real(c.ci_high),
                       real(c.p_value), count(fit.n), reference});
    }
    if (permute.empty()) return;
    PermutationSpec perm{permute, "field", permuted_term(fit, permute), iterations, seed, jobs};
    const auto null = permutation_null(table, spec, perm);
    r.table.add_row({label, outcome, "permutation(" + perm.term + ")", real(null.observed), "",
                     real(null.central_low), real(null.central_high), real(null.two_sided),
                     std::to_string(iterations), reference});
  };
  if (pooled) {
    run(field.empty() ? "all" : field, target_fields(d, field));
  } else {
    for_each_field(d, field, r, [&](const std::string& f) { run(f, {f}); });
  }
}

void tickrate(const Dataset& d, Options& o, Report& r) {
  const auto field = o.text("field");
  const auto which = o.text("top5_source", "both");
  std::vector<Top5Source> sources;
  if (which == "both") {
    sources = {Top5Source::kPersonal, Top5Source::kField};
  } else {
    sources = {parse_top5_source(which)};
  }
  const auto interval_token = o.text("interval", "normal");
  if (interval_token != "normal" && interval_token != "t") {
    throw Error(ErrorCode::kInvalidArgument, "interval must be 'normal' or 't'");
  }
  const auto interval = interval_token == "t" ? IntervalKind::kStudentT : IntervalKind::kNormal;
  const auto config = consensus_config(o);
  r.table.columns = {"field",         "source",       "n",          "slope",         "slope_ci_low",
                     "slope_ci_high", "slope_p_value", "prediction", "prediction_ci_low", "prediction_ci_high"};
  for_each_field(d, field, r, [&](const std::string& f) {
    for (auto s : sources) {
      const auto t = tick_rate_regression(d, f, s, interval, config);
      r.table.add_row({f, std::string(top5_source_name(s)), count(t.n), real(t.slope.estimate), real(t.slope.ci_low),
                       real(t.slope.ci_high), real(t.slope.p_value), real(t.at_top_decile.value),
                       real(t.at_top_decile.ci_low), real(t.at_top_decile.ci_high)});
    }
  });
}

std::vector<VenueId> item_names(std::size_t n) {
  std::vector<VenueId> items;
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "v%03zu", i);
    items.emplace_back(buf);
  }
  return items;
}

void null_experiment(const Dataset* templ, Options& o, Report& r) {
  if (!templ) throw Error(ErrorCode::kInvalidArgument, "the null experiment needs a template dataset");
  const int iterations = o.positive("iterations", 1);
  const auto seed = o.get<std::uint64_t>("seed", 0);
  const auto output_dir = o.text("output_dir");
  const bool with_accuracy = o.get<bool>("accuracy", true);
  AccuracyOptions options;
  options.consensus = consensus_config(o);
  options.jobs = o.jobs();
  o.finish();
  r.seed = seed;
  r.table.columns = {"iteration", "seed", "dataset_hash", "comparisons", "ties", "matches_template", "accuracy_percent"};
  for (int i = 0; i < iterations; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const auto null = generate_null_dataset(*templ, {.seed = s});
    const auto problems = check_null_matches_template(*templ, null);
    for (const auto& p : problems) r.warnings.push_back("iteration " + std::to_string(i + 1) + ": " + p);
    std::size_t ties = 0;
    for (const auto& c : null.comparisons) ties += !c.is_strict();
    std::string accuracy;
    if (with_accuracy) {
      double credit = 0;
      std::size_t eligible = 0;
      for (const auto& f : null.fields()) {
        try {
          const auto a = prediction_accuracy(null, f, ScoreSource::kLeaveOneOutField, options);
          credit += a.credit;
          eligible += a.eligible;
        } catch (const Error& e) {
          if (!skippable(e.code())) throw;
        }
      }
      if (eligible > 0) accuracy = format_percent(100.0 * credit / static_cast<double>(eligible));
    }
    if (!output_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "null-%04d", i + 1);
      write_dataset(null, std::filesystem::path(output_dir) / name);
    }
    r.table.add_row({std::to_string(i + 1), std::to_string(s), dataset_hash(null), count(null.comparisons.size()),
                     count(ties), problems.empty() ? "1" : "0", accuracy});
  }
}

void convergence(Options& o, Report& r) {
  const int items = o.positive("items", 20);
  const int sessions = o.positive("sessions", 200);
  const double beta = o.non_negative("beta", 1.0);
  const double indifference = o.non_negative("indifference", 0.08);
  if (indifference > 1) throw Error(ErrorCode::kInvalidArgument, "indifference must be at most 1");
  ConvergenceOptions options;
  options.fractions = o.get<std::vector<double>>("fractions", options.fractions);
  options.shuffles = o.positive("shuffles", options.shuffles);
  options.seed = o.get<std::uint64_t>("seed", 0);
  if (items < 2) throw Error(ErrorCode::kInvalidArgument, "items must be at least 2");
  r.seed = options.seed;
  const auto synthetic = synthetic_logistic_sessions(static_cast<std::size_t>(items),
                                                     static_cast<std::size_t>(sessions), beta, indifference,
                                                     options.seed);
  const auto result = convergence_experiment(synthetic.transcripts, options);
  r.table.columns = {"fraction", "arm", "mean_rho", "p20", "p80", "mean_accuracy"};
  for (const auto& p : result.points) {
    r.table.add_row({real(p.fraction), p.arm, real(p.mean_rho), real(p.p20), real(p.p80), real(p.mean_accuracy)});
  }
}

void agents(Options& o, Report& r) {
  const auto kind = parse_agent_kind(o.text("agent", "logistic"));
  const int items = o.positive("items", 20);
  const int sessions = o.positive("sessions", 100);
  const double beta = o.non_negative("beta", 2.0);
  const double indifference = o.non_negative("indifference", 0.0);
  const bool exhaust = o.get<bool>("continue", false);
  const auto seed = o.get<std::uint64_t>("seed", 0);
  if (items < 2) throw Error(ErrorCode::kInvalidArgument, "items must be at least 2");
  r.seed = seed;
  const auto names = item_names(static_cast<std::size_t>(items));
  r.table.columns = {"session", "agent", "comparisons", "strict", "violations", "violation_percent", "rank_statistic"};
  std::size_t strict = 0, violated = 0, total = 0;
  std::vector<double> ranks;
  for (int i = 0; i < sessions; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    CounterRng urng(~s);
    AgentSpec spec{kind, {}, beta, indifference, s};
    for (const auto& v : names) spec.utilities[v] = standard_normal(urng);
    SessionOptions options;
    options.continue_past_completion = exhaust;
    options.respondent_id = "agent" + std::to_string(i + 1);
    const auto transcript = run_agent_session(names, spec, {.seed = s}, options);
    const auto sc = self_consistency(transcript);
    strict += sc.strict;
    violated += sc.violations;
    total += transcript.size();
    ranks.insert(ranks.end(), sc.violation_ranks.begin(), sc.violation_ranks.end());
    r.table.add_row({std::to_string(i + 1), std::string(agent_kind_name(kind)), count(transcript.size()),
                     count(sc.strict), count(sc.violations), format_percent(sc.violation_percent),
                     real(sc.rank_statistic)});
  }
  std::optional<double> pooled_rank;
  if (!ranks.empty()) {
    double sum = 0;
    for (double v : ranks) sum += v;
    pooled_rank = sum / static_cast<double>(ranks.size());
  }
  const double pct = strict ? 100.0 * static_cast<double>(violated) / static_cast<double>(strict) : 0.0;
  r.table.add_row({"all", std::string(agent_kind_name(kind)), count(total), count(strict), count(violated),
                   format_percent(pct), real(pooled_rank)});
}

}  // namespace

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw Error(ErrorCode::kInvalidArgument, "row width does not match the header");
  rows.push_back(std::move(row));
}

std::string Table::to_csv() const {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += '\n';
  };
  line(columns);
  for (const auto& row : rows) line(row);
  return out;
}

std::string RunManifest::line() const {
  json m = json::object();
  m["subcommand"] = subcommand;
  m["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  m["dataset_hash"] = dataset_hash;
  m["seed"] = seed;
  m["version"] = version;
  return "# manifest " + m.dump();
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", value);
  return buf;
}

Report fit_report(const Dataset& dataset, const std::string& options_json) {
  Options o(options_json);
  Report r;
  r.seed = o.get<std::uint64_t>("seed", 0);
  o.jobs();
  const auto level = o.text("level", "field");
  const auto respondent = o.text("respondent");
  auto field = o.text("field");
  const bool loo = o.get<bool>("loo", false);
  RankConfig config = level == "individual" ? RankConfig::individual() : RankConfig::field();
  config.alpha = o.non_negative("alpha", config.alpha);
  r.resolved_config = o.finish();

  if (!respondent.empty() && !dataset.find_respondent(respondent)) {
    throw Error(ErrorCode::kNotFound, "respondent '" + respondent + "'");
  }
  if (loo && respondent.empty()) throw Error(ErrorCode::kInvalidArgument, "--loo needs a respondent");
  const std::optional<std::string> held = loo ? std::optional<std::string>(respondent) : std::nullopt;
  std::vector<Comparison> pool;
  if (level == "individual") {
    if (respondent.empty()) throw Error(ErrorCode::kInvalidArgument, "individual fits need a respondent");
    pool = dataset.comparisons_for(respondent);
  } else if (level == "field") {
    if (field.empty() && !respondent.empty()) field = dataset.find_respondent(respondent)->field;
    if (field.empty()) throw Error(ErrorCode::kInvalidArgument, "field fits need a field or a respondent");
    if (!has_field(dataset, field)) throw Error(ErrorCode::kUnknownField, "no respondents in field '" + field + "'");
    pool = pooled_comparisons(dataset, field, held);
  } else if (level == "global") {
    pool = pooled_comparisons(dataset, "", held);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown level '" + level + "'");
  }
  if (pool.empty()) throw Error(ErrorCode::kEmptyField, "no comparisons to fit");

  const auto scores = fit_and_rescale(build_matrix(pool), config);
  const auto raw = scores.raw_map();
  const auto ranks = ordinal_ranks(raw, std::set<VenueId>(scores.items.begin(), scores.items.end()));
  r.table.comments.push_back("alpha=" + real(config.alpha) + ",beta_hat=" + real(scores.inverse_temperature) +
                             ",solver_residual=" + real(scores.solver_residual));
  r.table.columns = {"venue_id", "raw", "rescaled", "normalized", "ordinal_rank"};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& id = scores.items[i];
    r.table.add_row({id, real(scores.raw_scores[i]),
                     scores.rescaled_scores ? real((*scores.rescaled_scores)[i]) : std::string(),
                     scores.normalized_scores ? real((*scores.normalized_scores)[i]) : std::string(),
                     std::to_string(ranks.at(id))});
  }
  return r;
}

std::vector<std::string> analysis_names() {
  return {"accumulation", "overlap",    "topk",       "agreement", "accuracy", "jif-accuracy",
          "rank-delta",   "violations", "topchoice", "regress",   "tickrate"};
}

Report analyze_report(const Dataset& dataset, const std::string& analysis, const std::string& options_json) {
  Options o(options_json);
  Report r;
  r.seed = o.get<std::uint64_t>("seed", 0);
  o.jobs();
  if (analysis == "accumulation") {
    accumulation(dataset, o, r);
  } else if (analysis == "overlap") {
    overlap(dataset, o, r);
  } else if (analysis == "topk") {
    topk(dataset, o, r);
  } else if (analysis == "agreement") {
    agreement(dataset, o, r);
  } else if (analysis == "accuracy") {
    accuracy(dataset, o, r, false);
  } else if (analysis == "jif-accuracy") {
    accuracy(dataset, o, r, true);
  } else if (analysis == "rank-delta") {
    rank_delta(dataset, o, r);
  } else if (analysis == "violations") {
    violations(dataset, o, r);
  } else if (analysis == "topchoice") {
    topchoice(dataset, o, r);
  } else if (analysis == "regress") {
    regress(dataset, o, r);
  } else if (analysis == "tickrate") {
    tickrate(dataset, o, r);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown analysis '" + analysis + "'");
  }
  r.resolved_config = o.finish();
  require_rows(r, analysis);
  return r;
}

std::vector<std::string> experiment_names() { return {"null", "convergence", "agents"}; }

Report simulate_report(const std::string& experiment, const std::string& options_json, const Dataset* templ) {
  Options o(options_json);
  Report r;
  r.seed = o.get<std::uint64_t>("seed", 0);
  o.jobs();
  if (experiment == "null") {
    null_experiment(templ, o, r);
  } else if (experiment == "convergence") {
    convergence(o, r);
  } else if (experiment == "agents") {
    agents(o, r);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown experiment '" + experiment + "'");
  }
  r.resolved_config = o.finish();
  return r;
}

}  // namespace prefrank
