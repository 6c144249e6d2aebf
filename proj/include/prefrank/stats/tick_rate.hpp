#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prefrank/core/types.hpp"
#include "prefrank/rank/springrank.hpp"
#include "prefrank/stats/ols.hpp"

namespace prefrank {

enum class Top5Source { kPersonal, kField };

std::string_view top5_source_name(Top5Source source);
Top5Source parse_top5_source(std::string_view token);

// |top ∩ publications| / |top| for a best-first list truncated to five.
// An empty list has no rate.
std::optional<double> tick_rate(const std::vector<VenueId>& ranking, const std::set<VenueId>& publications);

// PERSONAL uses the respondent's individual fit; FIELD the leave-one-out
// field consensus. Empty when the needed ranking does not exist.
std::optional<double> tick_rate(const Dataset& dataset, const std::string& respondent, Top5Source source,
                                const RankConfig& consensus = RankConfig::field());

// Stored deciles run 1 = most prestigious; regressions use 11 - decile so
// that larger values mean more prestige.
double prestige_axis(int decile);

struct TickRateRegression {
  std::string field;  // empty = every respondent
  Top5Source source = Top5Source::kPersonal;
  std::size_t n = 0;
  Coefficient slope;
  Prediction at_top_decile;  // prestige axis value 10
  RegressionResult fit;
};

// OLS of tick rate on the prestige axis over respondents with a decile and
// a ranking. Errors as fit_ols.
TickRateRegression tick_rate_regression(const Dataset& dataset, const std::string& field, Top5Source source,
                                        IntervalKind interval = IntervalKind::kNormal,
                                        const RankConfig& consensus = RankConfig::field());

}  // namespace prefrank
