#include "prefrank/analytics/consensus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "prefrank/core/rng.hpp"
#include "prefrank/core/parallel.hpp"
#include "prefrank/error.hpp"

namespace prefrank {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::map<VenueId, double> external_scores(const Dataset& dataset) {
  std::map<VenueId, double> out;
  for (const auto& [id, venue] : dataset.venues) {
    if (venue.external_score) out[id] = *venue.external_score;
  }
  return out;
}

std::vector<VenueId> top_n(const RankScores& scores, std::size_t n, const std::set<VenueId>* restrict_to) {
  std::vector<VenueId> out;
  for (const auto& venue : ranked_items(scores)) {
    if (restrict_to && !restrict_to->count(venue)) continue;
    out.push_back(venue);
    if (out.size() == n) break;
  }
  return out;
}

}  // namespace

std::vector<const RespondentRecord*> field_respondents(const Dataset& dataset, const std::string& field) {
  std::vector<const RespondentRecord*> out;
  for (const auto& [id, record] : dataset.respondents) {
    if (field.empty() || record.field == field) out.push_back(&record);
  }
  return out;
}

AccumulationCurve accumulation_curve(const Dataset& dataset, const std::string& field, int realizations,
                                     std::uint64_t seed) {
  if (realizations < 1) throw Error(ErrorCode::kInvalidArgument, "realizations must be positive");
  const auto respondents = field_respondents(dataset, field);
  if (respondents.empty()) throw Error(ErrorCode::kEmptyField, "no respondents in field '" + field + "'");

  std::unordered_map<VenueId, std::size_t> venue_index;
  std::vector<std::vector<std::size_t>> sets;
  for (const auto* r : respondents) {
    std::set<std::size_t> members;
    for (const auto& v : r->consideration_set) {
      members.insert(venue_index.try_emplace(v, venue_index.size()).first->second);
    }
    sets.emplace_back(members.begin(), members.end());
  }

  const std::size_t n = sets.size();
  AccumulationCurve curve;
  curve.field = field;
  curve.realizations = realizations;
  curve.seed = seed;
  std::vector<double> mean(n, 0.0), m2(n, 0.0);
  std::vector<std::size_t> order(n);
  std::vector<char> seen(venue_index.size());
  CounterRng rng(seed);
  for (int r = 0; r < realizations; ++r) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::fill(seen.begin(), seen.end(), 0);
    std::size_t unique = 0;
    for (std::size_t k = 0; k < n; ++k) {
      for (auto v : sets[order[k]]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++unique;
        }
      }
      const double x = static_cast<double>(unique);
      const double delta = x - mean[k];
      mean[k] += delta / (r + 1);
      m2[k] += delta * (x - mean[k]);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    curve.k_values.push_back(static_cast<int>(k + 1));
    curve.mean_unique.push_back(mean[k]);
    curve.stddev_unique.push_back(realizations > 1 ? std::sqrt(m2[k] / (realizations - 1)) : 0.0);
  }
  return curve;
}

OverlapResult within_field_overlap(const Dataset& dataset, const std::string& field, OverlapMode mode) {
  std::vector<std::pair<std::string, std::set<VenueId>>> sets;
  for (const auto* r : field_respondents(dataset, field)) {
    std::set<VenueId> s(r->consideration_set.begin(), r->consideration_set.end());
    if (!s.empty()) sets.emplace_back(r->id, std::move(s));
  }
  if (sets.size() < 2) throw Error(ErrorCode::kInvalidArgument, "overlap needs at least two respondents with venues");

  OverlapResult result;
  double total = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& mine = sets[i].second;
    double value = 0;
    if (mode == OverlapMode::kSetShare) {
      double sum = 0;
      for (std::size_t j = 0; j < sets.size(); ++j) {
        if (i == j) continue;
        std::size_t shared = 0;
        for (const auto& v : mine) shared += sets[j].second.count(v);
        sum += static_cast<double>(shared) / static_cast<double>(mine.size());
      }
      value = 100.0 * sum / static_cast<double>(sets.size() - 1);
    } else {
      std::size_t shared = 0;
      for (const auto& v : mine) {
        for (std::size_t j = 0; j < sets.size(); ++j) {
          if (j != i && sets[j].second.count(v)) {
            ++shared;
            break;
          }
        }
      }
      value = 100.0 * static_cast<double>(shared) / static_cast<double>(mine.size());
    }
    result.per_respondent[sets[i].first] = value;
    total += value;
  }
  result.mean = total / static_cast<double>(sets.size());
  return result;
}

std::vector<VenueShare> top_k_popularity(const Dataset& dataset, const std::string& field, int k) {
  const auto respondents = field_respondents(dataset, field);
  if (respondents.empty() || k <= 0) return {};
  std::map<VenueId, std::size_t> counts;
  for (const auto* r : respondents) {
    for (const auto& v : std::set<VenueId>(r->consideration_set.begin(), r->consideration_set.end())) ++counts[v];
  }
  std::vector<VenueShare> shares;
  for (const auto& [venue, count] : counts) {
    shares.push_back({venue, 100.0 * static_cast<double>(count) / static_cast<double>(respondents.size())});
  }
  std::stable_sort(shares.begin(), shares.end(), [](const auto& a, const auto& b) { return a.percent > b.percent; });
  if (shares.size() > static_cast<std::size_t>(k)) shares.resize(static_cast<std::size_t>(k));
  return shares;
}

std::string_view score_source_name(ScoreSource source) {
  switch (source) {
    case ScoreSource::kLeaveOneOutField: return "loo_field";
    case ScoreSource::kGlobal: return "global";
    case ScoreSource::kJif: return "jif";
  }
  return "?";
}

ScoreSource parse_score_source(std::string_view token) {
  const auto t = lower(token);
  if (t == "loo_field" || t == "loo" || t == "field") return ScoreSource::kLeaveOneOutField;
  if (t == "global") return ScoreSource::kGlobal;
  if (t == "jif") return ScoreSource::kJif;
  throw Error(ErrorCode::kInvalidArgument, "unknown score source '" + std::string(token) + "'");
}

AccuracyResult score_predictions(std::span<const Comparison> comparisons, const std::map<VenueId, double>& scores) {
  AccuracyResult result;
  for (const auto& c : comparisons) {
    if (!c.is_strict()) continue;
    auto w = scores.find(c.winner());
    auto l = scores.find(c.loser());
    if (w == scores.end() || l == scores.end()) {
      ++result.skipped;
      continue;
    }
    ++result.eligible;
    if (w->second > l->second) {
      result.credit += 1.0;
    } else if (w->second == l->second) {
      result.credit += 0.5;
    }
  }
  if (result.eligible > 0) result.percent = 100.0 * result.credit / static_cast<double>(result.eligible);
  return result;
}

AccuracyResult prediction_accuracy(const Dataset& dataset, const std::string& field, ScoreSource source,
                                   const AccuracyOptions& options) {
  const auto jif = external_scores(dataset);
  const auto respondents = field_respondents(dataset, field);
  std::vector<AccuracyResult> parts(respondents.size());
  parallel_for(respondents.size(), options.jobs, [&](std::size_t i, std::size_t) {
    const auto* r = respondents[i];
    auto comparisons = dataset.comparisons_for(r->id);
    if (options.jif_subset_only || source == ScoreSource::kJif) {
      std::erase_if(comparisons, [&](const Comparison& c) { return !jif.count(c.first) || !jif.count(c.second); });
    }
    if (std::none_of(comparisons.begin(), comparisons.end(), [](const auto& c) { return c.is_strict(); })) return;

    std::map<VenueId, double> scores;
    try {
      switch (source) {
        case ScoreSource::kLeaveOneOutField:
          scores = leave_one_out_field_scores(dataset, r->field, r->id, options.consensus).raw_map();
          break;
        case ScoreSource::kGlobal:
          scores = global_scores(dataset, r->id, options.consensus).raw_map();
          break;
        case ScoreSource::kJif:
          scores = jif;
          break;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyField) throw;
    }
    parts[i] = score_predictions(comparisons, scores);
  });
  AccuracyResult total;
  for (const auto& part : parts) {
    total.credit += part.credit;
    total.eligible += part.eligible;
    total.skipped += part.skipped;
  }
  if (total.eligible == 0) {
    throw Error(ErrorCode::kNoEligibleComparisons,
                "no scored strict comparisons for field '" + field + "' with source " +
                    std::string(score_source_name(source)));
  }
  total.percent = 100.0 * total.credit / static_cast<double>(total.eligible);
  return total;
}

AgreementResult top5_agreement(const Dataset& dataset, const std::string& field, const RankConfig& consensus) {
  AgreementResult result;
  double sum = 0;
  for (const auto* r : field_respondents(dataset, field)) {
    const auto comparisons = dataset.comparisons_for(r->id);
    if (comparisons.empty()) continue;
    RankScores loo;
    try {
      loo = leave_one_out_field_scores(dataset, r->field, r->id, consensus);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kEmptyField) continue;
      throw;
    }
    const auto individual = fit_springrank(build_matrix(comparisons), RankConfig::individual());
    std::set<VenueId> shared;
    for (const auto& v : individual.items) {
      if (loo.index_of(v)) shared.insert(v);
    }
    if (shared.empty()) continue;
    const std::size_t k = std::min<std::size_t>(5, shared.size());
    const auto mine = top_n(individual, k, &shared);
    const auto theirs = top_n(loo, k, &shared);
    std::size_t common = 0;
    for (const auto& v : mine) common += std::count(theirs.begin(), theirs.end(), v);
    const double value = 100.0 * static_cast<double>(common) / static_cast<double>(k);
    result.per_respondent[r->id] = value;
    sum += value;
  }
  if (result.per_respondent.empty()) {
    throw Error(ErrorCode::kNoEligibleComparisons, "no respondent in '" + field + "' has a scored top five");
  }
  result.mean = sum / static_cast<double>(result.per_respondent.size());
  return result;
}

SelfConsistency self_consistency(std::span<const Comparison> comparisons, const std::map<VenueId, double>& normalized,
                                 double tolerance) {
  SelfConsistency result;
  for (const auto& c : comparisons) {
    if (!c.is_strict()) continue;
    auto w = normalized.find(c.winner());
    auto l = normalized.find(c.loser());
    if (w == normalized.end() || l == normalized.end()) {
      throw Error(ErrorCode::kUnknownItem, "no score for a venue compared by " + c.respondent_id);
    }
    ++result.strict;
    if (w->second < l->second - tolerance) {
      ++result.violations;
      result.violation_ranks.push_back(l->second);
    }
  }
  if (result.strict > 0) {
    result.violation_percent = 100.0 * static_cast<double>(result.violations) / static_cast<double>(result.strict);
  }
  if (!result.violation_ranks.empty()) {
    result.rank_statistic = std::accumulate(result.violation_ranks.begin(), result.violation_ranks.end(), 0.0) /
                            static_cast<double>(result.violation_ranks.size());
  }
  return result;
}

SelfConsistency self_consistency(std::span<const Comparison> comparisons, double tolerance) {
  if (comparisons.empty()) return {};
  const auto fit = fit_springrank(build_matrix(comparisons), RankConfig::individual());
  const auto values = normalize_min_max(fit.raw_scores);
  std::map<VenueId, double> normalized;
  for (std::size_t i = 0; i < fit.items.size(); ++i) normalized[fit.items[i]] = values[i];
  return self_consistency(comparisons, normalized, tolerance);
}

SelfConsistency self_consistency(const Dataset& dataset, const std::string& respondent, double tolerance) {
  if (!dataset.find_respondent(respondent)) throw Error(ErrorCode::kNotFound, "unknown respondent '" + respondent + "'");
  return self_consistency(dataset.comparisons_for(respondent), tolerance);
}

ConsistencySummary consistency_summary(const Dataset& dataset, const std::string& field) {
  ConsistencySummary summary;
  double rank_sum = 0;
  for (const auto* r : field_respondents(dataset, field)) {
    const auto sc = self_consistency(dataset, r->id);
    if (sc.strict == 0) continue;
    ++summary.respondents;
    summary.fully_consistent += sc.violations == 0;
    summary.strict += sc.strict;
    summary.violations += sc.violations;
    for (double x : sc.violation_ranks) rank_sum += x;
  }
  if (summary.strict > 0) {
    summary.violation_percent = 100.0 * static_cast<double>(summary.violations) / static_cast<double>(summary.strict);
    summary.consistent_percent =
        100.0 * static_cast<double>(summary.fully_consistent) / static_cast<double>(summary.respondents);
  }
  if (summary.violations > 0) summary.rank_statistic = rank_sum / static_cast<double>(summary.violations);
  return summary;
}

std::vector<RankDeltaRow> ordinal_rank_delta(const std::map<VenueId, double>& preference,
                                             const std::map<VenueId, double>& external) {
  std::set<VenueId> eligible;
  for (const auto& [venue, score] : preference) {
    if (external.count(venue)) eligible.insert(venue);
  }
  const auto pref_ranks = ordinal_ranks(preference, eligible);
  const auto ext_ranks = ordinal_ranks(external, eligible);
  std::vector<RankDeltaRow> rows;
  for (const auto& venue : eligible) {
    const int p = pref_ranks.at(venue);
    const int j = ext_ranks.at(venue);
    rows.push_back({venue, p, j, j - p});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.rank_pref < b.rank_pref; });
  return rows;
}

std::vector<RankDeltaRow> ordinal_rank_delta(const Dataset& dataset, const std::string& field,
                                             double min_selection_percent, const RankConfig& consensus) {
  const auto respondents = field_respondents(dataset, field);
  if (respondents.empty()) throw Error(ErrorCode::kEmptyField, "no respondents in field '" + field + "'");
  const auto popularity = top_k_popularity(dataset, field, std::numeric_limits<int>::max());
  std::set<VenueId> popular;
  for (const auto& share : popularity) {
    if (share.percent >= min_selection_percent) popular.insert(share.venue);
  }
  const auto fit = field.empty() ? global_scores(dataset, std::nullopt, consensus)
                                 : leave_one_out_field_scores(dataset, field, std::nullopt, consensus);
  std::map<VenueId, double> preference;
  for (const auto& [venue, score] : fit.raw_map()) {
    if (popular.count(venue)) preference[venue] = score;
  }
  return ordinal_rank_delta(preference, external_scores(dataset));
}

ChoiceType parse_choice_type(std::string_view token) {
  const auto t = lower(token);
  if (t == "top_preference" || t == "preference") return ChoiceType::kTopPreference;
  if (t == "top_aspiration" || t == "aspiration") return ChoiceType::kTopAspiration;
  throw Error(ErrorCode::kInvalidArgument, "unknown choice type '" + std::string(token) + "'");
}

std::string_view choice_type_name(ChoiceType choice) {
  return choice == ChoiceType::kTopPreference ? "top_preference" : "top_aspiration";
}

double normalized_position(const std::vector<VenueId>& ranking, const VenueId& venue) {
  auto it = std::find(ranking.begin(), ranking.end(), venue);
  if (it == ranking.end()) throw Error(ErrorCode::kNotFound, "'" + venue + "' is not in the ranking");
  if (ranking.size() == 1) return 1.0;
  const auto r = static_cast<double>(it - ranking.begin() + 1);
  const auto n = static_cast<double>(ranking.size());
  return (n - r) / (n - 1);
}

double top_choice_normalized_rank(const Dataset& dataset, const std::string& respondent, ChoiceType choice,
                                  const RankConfig& consensus) {
  const auto* record = dataset.find_respondent(respondent);
  if (!record) throw Error(ErrorCode::kNotFound, "unknown respondent '" + respondent + "'");
  VenueId venue;
  if (choice == ChoiceType::kTopAspiration) {
    if (!record->aspirations) throw Error(ErrorCode::kNotFound, "respondent '" + respondent + "' has no aspirations");
    venue = record->aspirations->top;
  } else {
    const auto comparisons = dataset.comparisons_for(respondent);
    if (comparisons.empty()) throw Error(ErrorCode::kNotFound, "respondent '" + respondent + "' has no comparisons");
    venue = ranked_items(fit_springrank(build_matrix(comparisons), RankConfig::individual())).front();
  }
  const auto loo = leave_one_out_field_scores(dataset, record->field, respondent, consensus);
  return normalized_position(ranked_items(loo), venue);
}

std::vector<std::string> default_flagship_exclusions() {
  return {"Nature", "Science", "PNAS", "Proceedings of the National Academy of Sciences"};
}

Flagship flagship(const Dataset& dataset, const std::string& field, const std::vector<std::string>& exclusions) {
  std::set<std::string> excluded;
  for (const auto& e : exclusions) excluded.insert(lower(e));
  auto is_excluded = [&](const VenueId& id) {
    if (excluded.count(lower(id))) return true;
    const auto* venue = dataset.find_venue(id);
    return venue && excluded.count(lower(venue->name));
  };
  std::map<VenueId, std::size_t> counts;
  std::size_t with_aspirations = 0;
  for (const auto* r : field_respondents(dataset, field)) {
    if (!r->aspirations) continue;
    ++with_aspirations;
    if (!is_excluded(r->aspirations->top)) ++counts[r->aspirations->top];
  }
  if (counts.empty()) throw Error(ErrorCode::kNotFound, "no eligible top aspirations in field '" + field + "'");
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return {best->first, 100.0 * static_cast<double>(best->second) / static_cast<double>(with_aspirations)};
}

}  // namespace prefrank
