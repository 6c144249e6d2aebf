#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefrank/core/types.hpp"
#include "prefrank/rank/springrank.hpp"

namespace prefrank {

// An empty field name means every respondent in the dataset.
std::vector<const RespondentRecord*> field_respondents(const Dataset& dataset, const std::string& field);

struct AccumulationCurve {
  std::string field;
  std::vector<int> k_values;          // 1..n
  std::vector<double> mean_unique;    // mean union size after k draws
  std::vector<double> stddev_unique;  // across realizations
  int realizations = 0;
  std::uint64_t seed = 0;
};

// Mean size of the union of k consideration sets drawn without replacement,
// averaged over `realizations` random respondent orders.
AccumulationCurve accumulation_curve(const Dataset& dataset, const std::string& field, int realizations = 100,
                                     std::uint64_t seed = 0);

enum class OverlapMode {
  kSetShare,  // mean over others of |S_r ∩ S_o| / |S_r|
  kAnyOther,  // share of S_r selected by at least one other respondent
};

struct OverlapResult {
  std::map<std::string, double> per_respondent;  // percentages
  double mean = 0;
};

// Respondents with empty consideration sets are skipped. Throws
// Error(kInvalidArgument) with fewer than two usable respondents.
OverlapResult within_field_overlap(const Dataset& dataset, const std::string& field,
                                   OverlapMode mode = OverlapMode::kSetShare);

struct VenueShare {
  VenueId venue;
  double percent = 0;

  bool operator==(const VenueShare&) const = default;
};

// Most-selected venues by share of respondents, ties by id.
std::vector<VenueShare> top_k_popularity(const Dataset& dataset, const std::string& field, int k = 3);

enum class ScoreSource { kLeaveOneOutField, kGlobal, kJif };

std::string_view score_source_name(ScoreSource source);
ScoreSource parse_score_source(std::string_view token);

struct AccuracyOptions {
  RankConfig consensus = RankConfig::field();
  // Only score comparisons in which both venues carry an external score.
  bool jif_subset_only = false;
  int jobs = 1;  // worker threads for the per-respondent refits
};

struct AccuracyResult {
  double percent = 0;
  double credit = 0;       // correct predictions, ties counted 0.5
  std::size_t eligible = 0;  // strict comparisons with both venues scored
  std::size_t skipped = 0;   // strict comparisons lacking a score
};

// Share of strict comparisons in which the venue with the higher predicted
// score was chosen. Leave-one-out and global scores hold out the respondent
// being predicted. Throws Error(kNoEligibleComparisons) when nothing is scored.
AccuracyResult prediction_accuracy(const Dataset& dataset, const std::string& field, ScoreSource source,
                                   const AccuracyOptions& options = {});

// Scores `comparisons` against a fixed score map with the same conventions.
AccuracyResult score_predictions(std::span<const Comparison> comparisons, const std::map<VenueId, double>& scores);

struct AgreementResult {
  std::map<std::string, double> per_respondent;  // percentages
  double mean = 0;
};

// Overlap of each respondent's individual top five with the leave-one-out
// field top five among the venues that respondent compared.
AgreementResult top5_agreement(const Dataset& dataset, const std::string& field,
                               const RankConfig& consensus = RankConfig::field());

struct SelfConsistency {
  std::size_t strict = 0;
  std::size_t violations = 0;
  double violation_percent = 0;
  // Mean normalized individual score of the higher-scored (rejected) venue
  // over violations; empty without violations.
  std::optional<double> rank_statistic;
  std::vector<double> violation_ranks;
};

SelfConsistency self_consistency(const Dataset& dataset, const std::string& respondent,
                                 double tolerance = 1e-9);
SelfConsistency self_consistency(std::span<const Comparison> comparisons, double tolerance = 1e-9);
// Same statistic against given [0, 1]-normalized scores.
SelfConsistency self_consistency(std::span<const Comparison> comparisons, const std::map<VenueId, double>& normalized,
                                 double tolerance = 1e-9);

struct ConsistencySummary {
  std::size_t respondents = 0;
  std::size_t fully_consistent = 0;
  std::size_t strict = 0;
  std::size_t violations = 0;
  double violation_percent = 0;
  double consistent_percent = 0;
  std::optional<double> rank_statistic;  // pooled over every violation
};

ConsistencySummary consistency_summary(const Dataset& dataset, const std::string& field);

struct RankDeltaRow {
  VenueId venue;
  int rank_pref = 0;
  int rank_jif = 0;
  int diff = 0;  // rank_jif - rank_pref

  bool operator==(const RankDeltaRow&) const = default;
};

// Venues selected by at least `min_selection_percent` of the field's
// respondents that have both a consensus score and an external score,
// ranked by each and differenced. Rows ordered by preference rank.
std::vector<RankDeltaRow> ordinal_rank_delta(const Dataset& dataset, const std::string& field,
                                             double min_selection_percent = 10.0,
                                             const RankConfig& consensus = RankConfig::field());
std::vector<RankDeltaRow> ordinal_rank_delta(const std::map<VenueId, double>& preference,
                                             const std::map<VenueId, double>& external);

enum class ChoiceType { kTopPreference, kTopAspiration };

ChoiceType parse_choice_type(std::string_view token);
std::string_view choice_type_name(ChoiceType choice);

// (N - r) / (N - 1) for the venue's 1-based position r in the respondent's
// leave-one-out field ranking of N venues; 1.0 when N = 1.
// Throws Error(kNotFound) when the choice is unavailable or unranked.
double top_choice_normalized_rank(const Dataset& dataset, const std::string& respondent, ChoiceType choice,
                                  const RankConfig& consensus = RankConfig::field());
double normalized_position(const std::vector<VenueId>& ranking, const VenueId& venue);

std::vector<std::string> default_flagship_exclusions();

struct Flagship {
  VenueId venue;
  double percent = 0;  // share of the field's respondents with aspirations
};

// Most common top aspiration, skipping venues whose id or name matches an
// exclusion (case-insensitive). Throws Error(kNotFound) without candidates.
Flagship flagship(const Dataset& dataset, const std::string& field,
                  const std::vector<std::string>& exclusions = default_flagship_exclusions());

}  // namespace prefrank
