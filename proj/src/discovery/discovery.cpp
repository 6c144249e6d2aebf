#include "prefrank/discovery/discovery.hpp"

#include <algorithm>
#include <cmath>

#include "prefrank/error.hpp"

namespace prefrank {

namespace {

const std::map<VenueId, double> kEmptyRow;

// Candidate ordering shared by the recommender and the popularity fallback.
bool better(double score_a, std::int64_t works_a, const VenueId& a, double score_b, std::int64_t works_b,
            const VenueId& b) {
  if (score_a != score_b) return score_a > score_b;
  if (works_a != works_b) return works_a > works_b;
  return a < b;
}

std::set<VenueId> history_ids(const DiscoveryState& state) {
  std::set<VenueId> ids;
  for (const auto& [venue, works] : state.history_pool) ids.insert(venue);
  return ids;
}

std::optional<std::pair<VenueId, std::int64_t>> next_history(const DiscoveryState& state) {
  if (state.history_abandoned) return std::nullopt;
  for (const auto& entry : state.history_pool) {
    if (!state.asked.count(entry.first)) return entry;
  }
  return std::nullopt;
}

std::optional<VenueId> next_recommendation(const DiscoveryState& state, const CitationIndex& index) {
  if (state.liked.empty()) return std::nullopt;
  std::set<VenueId> excluded = state.asked;
  for (const auto& [venue, works] : state.history_pool) excluded.insert(venue);
  try {
    return recommend({state.liked.begin(), state.liked.end()}, index, excluded);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNoCandidate) return std::nullopt;
    throw;
  }
}

std::optional<VenueId> next_popular(const DiscoveryState& state, const CitationIndex& index) {
  const auto history = history_ids(state);
  std::optional<VenueId> best;
  std::int64_t best_works = -1;
  for (const auto& [venue, works] : index.works_counts()) {
    if (state.asked.count(venue) || history.count(venue)) continue;
    if (!best || better(0, works, venue, 0, best_works, *best)) {
      best = venue;
      best_works = works;
    }
  }
  return best;
}

}  // namespace

CitationIndex CitationIndex::from_dataset(const Dataset& dataset) {
  std::map<VenueId, std::int64_t> works;
  for (const auto& [id, venue] : dataset.venues) works[id] = venue.works_count;
  return from_counts(dataset.citations, std::move(works));
}

CitationIndex CitationIndex::from_counts(const std::map<CitationKey, double>& counts,
                                         std::map<VenueId, std::int64_t> works_counts) {
  CitationIndex index;
  for (const auto& [key, count] : counts) {
    if (!(count >= 0) || !std::isfinite(count)) {
      throw Error(ErrorCode::kInvalidArgument, "citation count must be finite and non-negative");
    }
    if (count > 0) index.raw_[key.first][key.second] += count;
  }
  index.works_ = std::move(works_counts);
  index.normalize();
  return index;
}

void CitationIndex::normalize() {
  rows_.clear();
  for (const auto& [citing, raw_row] : raw_) {
    double total = 0;
    for (const auto& [cited, count] : raw_row) total += count;
    if (total <= 0) continue;
    auto& row = rows_[citing];
    for (const auto& [cited, count] : raw_row) row[cited] = count / total;
  }
}

CitationIndex CitationIndex::scaled(double factor) const {
  CitationIndex copy = *this;
  for (auto& [citing, row] : copy.raw_) {
    for (auto& [cited, count] : row) count *= factor;
  }
  copy.normalize();
  return copy;
}

const std::map<VenueId, double>& CitationIndex::row(const VenueId& citing) const {
  auto it = rows_.find(citing);
  return it == rows_.end() ? kEmptyRow : it->second;
}

std::int64_t CitationIndex::works_count(const VenueId& venue) const {
  auto it = works_.find(venue);
  return it == works_.end() ? 0 : it->second;
}

VenueId recommend(const std::set<VenueId>& liked, const CitationIndex& index, const std::set<VenueId>& excluded) {
  if (liked.empty()) throw Error(ErrorCode::kInvalidArgument, "recommend needs at least one liked venue");
  std::map<VenueId, double> scores;
  for (const auto& source : liked) {
    for (const auto& [cited, weight] : index.row(source)) scores[cited] += weight;
  }
  std::optional<VenueId> best;
  double best_score = 0;
  std::int64_t best_works = 0;
  for (const auto& [venue, score] : scores) {
    if (score <= 0 || excluded.count(venue)) continue;
    const auto works = index.works_count(venue);
    if (!best || better(score, works, venue, best_score, best_works, *best)) {
      best = venue;
      best_score = score;
      best_works = works;
    }
  }
  if (!best) throw Error(ErrorCode::kNoCandidate, "every cited venue is excluded");
  return *best;
}

bool DiscoveryState::is_liked(const VenueId& venue) const {
  return std::find(liked.begin(), liked.end(), venue) != liked.end();
}

bool DiscoveryState::in_history(const VenueId& venue) const {
  return std::any_of(history_pool.begin(), history_pool.end(), [&](const auto& e) { return e.first == venue; });
}

DiscoveryState make_discovery_state(const std::set<VenueId>& publications, const CitationIndex& index,
                                    const std::vector<VenueId>& seeds, DiscoveryConfig config) {
  if (config.questions_target < 1) throw Error(ErrorCode::kInvalidArgument, "questions_target must be positive");
  DiscoveryState state;
  state.config = config;
  for (const auto& venue : publications) state.history_pool.emplace_back(venue, index.works_count(venue));
  std::sort(state.history_pool.begin(), state.history_pool.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  for (const auto& venue : seeds) {
    if (state.is_liked(venue)) continue;
    state.liked.push_back(venue);
    state.asked.insert(venue);
  }
  return state;
}

std::optional<DiscoveryQuestion> next_discovery_question(const DiscoveryState& state, const CitationIndex& index) {
  if (state.questions_asked >= state.config.questions_target) return std::nullopt;
  const auto history = next_history(state);
  const bool history_phase = history && state.history_served < state.config.history_phase_size;
  if (history_phase) return DiscoveryQuestion{history->first, QuestionSource::kHistory};

  const auto recommendation = next_recommendation(state, index);
  if (recommendation) {
    const bool recommender_phase = state.recommender_served < state.config.recommender_phase_size;
    if (recommender_phase || !history || index.works_count(*recommendation) > history->second) {
      return DiscoveryQuestion{*recommendation, QuestionSource::kRecommender};
    }
  }
  if (history) return DiscoveryQuestion{history->first, QuestionSource::kHistory};
  if (auto popular = next_popular(state, index)) return DiscoveryQuestion{*popular, QuestionSource::kPopularity};
  return std::nullopt;
}

DiscoveryState record_discovery(const DiscoveryState& state, const CitationIndex& index, const VenueId& venue,
                                bool liked) {
  const auto question = next_discovery_question(state, index);
  if (!question || question->venue != venue) {
    throw Error(ErrorCode::kUnexpectedVenue,
                "'" + venue + "' is not the current question" + (question ? " ('" + question->venue + "')" : ""));
  }
  DiscoveryState next = state;
  next.asked.insert(venue);
  ++next.questions_asked;
  if (question->source == QuestionSource::kHistory) ++next.history_served;
  if (question->source == QuestionSource::kRecommender) ++next.recommender_served;
  if (liked) {
    next.liked.push_back(venue);
  } else {
    next.rejected.insert(venue);
    if (next.in_history(venue) && !next.history_abandoned) {
      if (++next.history_rejections >= next.config.history_rejection_limit) next.history_abandoned = true;
    }
  }
  return next;
}

DiscoveryState direct_add(const DiscoveryState& state, const VenueId& venue) {
  if (venue.empty()) throw Error(ErrorCode::kInvalidArgument, "venue id is empty");
  if (state.is_liked(venue)) throw Error(ErrorCode::kAlreadyPresent, "'" + venue + "' is already liked");
  DiscoveryState next = state;
  next.rejected.erase(venue);
  next.liked.push_back(venue);
  next.asked.insert(venue);
  return next;
}

std::vector<std::string> check_discovery_invariants(const DiscoveryState& state) {
  std::vector<std::string> out;
  std::set<VenueId> liked(state.liked.begin(), state.liked.end());
  if (liked.size() != state.liked.size()) out.push_back("liked contains duplicates");
  for (const auto& venue : liked) {
    if (state.rejected.count(venue)) out.push_back("'" + venue + "' is both liked and rejected");
    if (!state.asked.count(venue)) out.push_back("liked '" + venue + "' missing from asked");
  }
  for (const auto& venue : state.rejected) {
    if (!state.asked.count(venue)) out.push_back("rejected '" + venue + "' missing from asked");
  }
  if (state.history_rejections > state.config.history_rejection_limit) out.push_back("too many history rejections");
  if (state.history_abandoned != (state.history_rejections >= state.config.history_rejection_limit)) {
    out.push_back("abandonment flag disagrees with rejection count");
  }
  if (state.questions_asked > state.config.questions_target) out.push_back("more questions than the target");
  for (std::size_t i = 1; i < state.history_pool.size(); ++i) {
    if (state.history_pool[i - 1].second < state.history_pool[i].second) out.push_back("history pool out of order");
  }
  return out;
}

}  // namespace prefrank
