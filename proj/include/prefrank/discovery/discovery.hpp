#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "prefrank/core/types.hpp"

namespace prefrank {

// Row-normalized citation weights: each citing venue's outgoing counts are
// divided by their sum, so every nonzero row sums to one.
class CitationIndex {
 public:
  CitationIndex() = default;
  static CitationIndex from_dataset(const Dataset& dataset);
  static CitationIndex from_counts(const std::map<CitationKey, double>& counts,
                                   std::map<VenueId, std::int64_t> works_counts);

  const std::map<VenueId, double>& row(const VenueId& citing) const;
  std::int64_t works_count(const VenueId& venue) const;
  const std::map<VenueId, std::map<VenueId, double>>& rows() const { return rows_; }
  const std::map<VenueId, std::int64_t>& works_counts() const { return works_; }

  // Multiply every raw count by `factor` before normalizing (used to check
  // scale invariance).
  CitationIndex scaled(double factor) const;

 private:
  std::map<VenueId, std::map<VenueId, double>> raw_;
  std::map<VenueId, std::map<VenueId, double>> rows_;
  std::map<VenueId, std::int64_t> works_;
  void normalize();
};

// Argmax over venues not in `excluded` of the summed normalized weights from
// the liked venues; ties go to the larger works_count, then the smaller id.
// Throws Error(kInvalidArgument) when liked is empty and Error(kNoCandidate)
// when no unexcluded venue has a positive score.
VenueId recommend(const std::set<VenueId>& liked, const CitationIndex& index, const std::set<VenueId>& excluded);

enum class QuestionSource { kHistory, kRecommender, kPopularity };

struct DiscoveryQuestion {
  VenueId venue;
  QuestionSource source = QuestionSource::kHistory;

  bool operator==(const DiscoveryQuestion&) const = default;
};

struct DiscoveryConfig {
  int questions_target = 20;
  int history_phase_size = 5;
  int recommender_phase_size = 5;
  int history_rejection_limit = 3;

  bool operator==(const DiscoveryConfig&) const = default;
};

struct DiscoveryState {
  std::vector<VenueId> liked;  // in order of acceptance
  std::set<VenueId> rejected;
  std::set<VenueId> asked;
  std::vector<std::pair<VenueId, std::int64_t>> history_pool;  // works_count descending
  int history_served = 0;
  int history_rejections = 0;
  bool history_abandoned = false;
  int recommender_served = 0;
  int questions_asked = 0;
  DiscoveryConfig config;

  bool operator==(const DiscoveryState&) const = default;

  bool is_liked(const VenueId& venue) const;
  bool in_history(const VenueId& venue) const;
};

// Seeds the history pool from the respondent's publication venues and puts
// any seed venues (e.g. aspirations) straight into liked.
DiscoveryState make_discovery_state(const std::set<VenueId>& publications, const CitationIndex& index,
                                    const std::vector<VenueId>& seeds = {}, DiscoveryConfig config = {});

// Pure function of the state; empty once the stage is done.
std::optional<DiscoveryQuestion> next_discovery_question(const DiscoveryState& state, const CitationIndex& index);

// `venue` must equal the current question. Throws Error(kUnexpectedVenue).
DiscoveryState record_discovery(const DiscoveryState& state, const CitationIndex& index, const VenueId& venue,
                                bool liked);

// Throws Error(kAlreadyPresent) if already liked.
DiscoveryState direct_add(const DiscoveryState& state, const VenueId& venue);

std::vector<std::string> check_discovery_invariants(const DiscoveryState& state);

}  // namespace prefrank
