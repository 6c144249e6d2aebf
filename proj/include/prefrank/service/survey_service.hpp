#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "prefrank/core/types.hpp"
#include "prefrank/discovery/discovery.hpp"
#include "prefrank/rank/springrank.hpp"
#include "prefrank/sched/pair_scheduler.hpp"
#include "prefrank/service/config.hpp"
#include "prefrank/service/event_log.hpp"

namespace prefrank {

struct SessionRequest {
  std::string field;
  Aspirations aspirations;
  std::vector<VenueId> publications;
  std::optional<std::string> label;
};

enum class Stage { kDiscovery, kComparison, kDone };
std::string_view stage_name(Stage stage);

enum class QuestionKind { kDiscovery, kComparison, kDone };
std::string_view question_kind_name(QuestionKind kind);

struct NextQuestion {
  QuestionKind kind = QuestionKind::kDone;
  std::optional<DiscoveryQuestion> discovery;
  std::optional<std::pair<VenueId, VenueId>> pair;
  bool stage_complete = false;  // comparison target met
  bool exhausted = false;       // every pair answered

  bool operator==(const NextQuestion&) const = default;
};

struct SessionAnswer {
  QuestionKind kind = QuestionKind::kDiscovery;
  VenueId venue;  // discovery
  bool liked = false;
  VenueId first;  // comparison
  VenueId second;
  Outcome outcome = Outcome::kIndifferent;
};

struct Progress {
  double discovery = 0;
  double comparison = 0;
  double overall = 0;
  int questions_asked = 0;
  int comparisons = 0;

  bool operator==(const Progress&) const = default;
};

struct ScoreRow {
  VenueId venue;
  double score = 0;       // rescaled when the temperature is identifiable, raw otherwise
  double normalized = 0;  // min-max over the rows shown
  int rank = 0;

  bool operator==(const ScoreRow&) const = default;
};

struct SessionSummary {
  Progress progress;
  std::vector<ScoreRow> personal;
  std::vector<ScoreRow> consensus;  // excludes this session's comparisons
  std::vector<std::string> warnings;
};

struct SessionInfo {
  std::string session_id;
  std::string field;
  Stage stage = Stage::kDiscovery;
  std::vector<VenueId> liked;
  Progress progress;
  std::size_t answers = 0;  // answer, direct-add and undo events applied
};

struct AnswerResult {
  Progress progress;
  NextQuestion next;
};

// Event-sourced survey sessions. Every state change is appended to the
// event log before it takes effect; opening the service replays the log, so
// state is a fold over events. Per-session operations are serialized.
class SurveyService {
 public:
  SurveyService(ServiceConfig config, Dataset reference);
  ~SurveyService();
  SurveyService(const SurveyService&) = delete;
  SurveyService& operator=(const SurveyService&) = delete;

  // Loads the reference dataset from config.data_dir (if set).
  static std::unique_ptr<SurveyService> open(const ServiceConfig& config);

  // Throws kUnknownField, kUnknownVenue, kInvalidArgument (repeated aspiration).
  std::string create_session(const SessionRequest& request);

  // Idempotent until an answer arrives. Throws kSessionNotFound.
  NextQuestion next_question(const std::string& session_id, bool continue_past_completion = false);

  // Throws kStaleAnswer unless the answer matches the outstanding question.
  AnswerResult submit_answer(const std::string& session_id, const SessionAnswer& answer,
                             bool continue_past_completion = false);

  // Reverts the latest discovery answer, direct add or comparison.
  // Throws kNothingToUndo.
  NextQuestion undo(const std::string& session_id);

  // Adds a venue to the consideration set during discovery.
  Progress add_consideration(const std::string& session_id, const VenueId& venue);

  // Throws kStageIncomplete before the comparison stage completes.
  SessionSummary summary(const std::string& session_id);

  // Consensus over the reference data and every session in the field.
  std::vector<ScoreRow> field_rankings(const std::string& field);

  SessionInfo info(const std::string& session_id);
  std::vector<std::string> session_ids() const;
  std::vector<std::pair<VenueId, std::string>> search_venues(const std::string& prefix, std::size_t limit) const;

  const ServiceConfig& config() const { return config_; }
  const Dataset& reference() const { return reference_; }
  const EventLog& log() const { return *log_; }
  void close();

  struct SessionData;

 private:
  struct Slot;
  std::shared_ptr<Slot> slot(const std::string& session_id) const;
  void replay();
  bool field_known(const std::string& field) const;
  std::vector<Comparison> field_comparisons(const std::string& field, const std::string& excluded_session);
  RankScores consensus_fit(const std::string& field, const std::string& excluded_session);

  ServiceConfig config_;
  Dataset reference_;
  CitationIndex index_;
  std::unique_ptr<EventLog> log_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t sessions_created_ = 0;
  std::mutex create_mutex_;
  std::mutex cache_mutex_;
  std::map<std::tuple<std::string, std::string, std::size_t>, RankScores> consensus_cache_;
};

// Ranked table of a fit restricted to `venues` (all fitted items when empty).
std::vector<ScoreRow> score_rows(const RankScores& scores, const std::vector<VenueId>& venues = {});

}  // namespace prefrank
