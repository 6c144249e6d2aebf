#include "prefrank/stats/tick_rate.hpp"

#include <algorithm>

#include "prefrank/analytics/consensus.hpp"
#include "prefrank/error.hpp"

namespace prefrank {

std::string_view top5_source_name(Top5Source source) {
  return source == Top5Source::kPersonal ? "personal" : "field";
}

Top5Source parse_top5_source(std::string_view token) {
  if (token == "personal" || token == "PERSONAL") return Top5Source::kPersonal;
  if (token == "field" || token == "FIELD") return Top5Source::kField;
  throw Error(ErrorCode::kInvalidArgument, "unknown top-5 source '" + std::string(token) + "'");
}

std::optional<double> tick_rate(const std::vector<VenueId>& ranking, const std::set<VenueId>& publications) {
  if (ranking.empty()) return std::nullopt;
  const std::size_t k = std::min<std::size_t>(5, ranking.size());
  std::size_t ticks = 0;
  for (std::size_t i = 0; i < k; ++i) ticks += publications.count(ranking[i]);
  return static_cast<double>(ticks) / static_cast<double>(k);
}

std::optional<double> tick_rate(const Dataset& dataset, const std::string& respondent, Top5Source source,
                                const RankConfig& consensus) {
  const auto* record = dataset.find_respondent(respondent);
  if (!record) throw Error(ErrorCode::kNotFound, "unknown respondent '" + respondent + "'");
  if (source == Top5Source::kPersonal) {
    const auto comparisons = dataset.comparisons_for(respondent);
    if (comparisons.empty()) return std::nullopt;
    return tick_rate(ranked_items(fit_springrank(build_matrix(comparisons), RankConfig::individual())),
                     record->publications);
  }
  try {
    return tick_rate(ranked_items(leave_one_out_field_scores(dataset, record->field, respondent, consensus)),
                     record->publications);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEmptyField) return std::nullopt;
    throw;
  }
}

double prestige_axis(int decile) { return 11.0 - decile; }

TickRateRegression tick_rate_regression(const Dataset& dataset, const std::string& field, Top5Source source,
                                        IntervalKind interval, const RankConfig& consensus) {
  DataTable table;
  table.columns = {"tick_rate", "prestige"};
  for (const auto* r : field_respondents(dataset, field)) {
    if (!r->prestige_decile) continue;
    const auto rate = tick_rate(dataset, r->id, source, consensus);
    if (!rate) continue;
    table.add_row({*rate, prestige_axis(*r->prestige_decile)});
  }
  RegressionSpec spec;
  spec.outcome = "tick_rate";
  spec.covariates = {{"prestige", CovariateKind::kContinuous}};
  spec.interval = interval;

  TickRateRegression out;
  out.field = field;
  out.source = source;
  out.fit = fit_ols(table, spec);
  out.n = out.fit.n;
  out.slope = out.fit.at("prestige");
  out.at_top_decile = predict(out.fit, {{"prestige", prestige_axis(1)}});
  return out;
}

}  // namespace prefrank
