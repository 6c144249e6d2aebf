#include "prefrank/service/survey_service.hpp"

#include <openssl/rand.h>

#include <algorithm>
#include <json.hpp>
#include <set>

#include "prefrank/core/dataset_io.hpp"
#include "prefrank/error.hpp"

namespace prefrank {

using nlohmann::json;

enum class ActionKind { kDiscovery, kDirectAdd, kComparison };

struct SurveyService::SessionData {
  std::string id;
  std::string field;
  std::uint64_t seed = 0;
  bool aspirations_set = false;
  DiscoveryState discovery;
  std::vector<ActionKind> actions;
  std::vector<DiscoveryState> discovery_undo;
  std::optional<PairScheduler> scheduler;
  std::size_t answers = 0;
};

struct SurveyService::Slot {
  std::mutex mutex;
  SessionData data;
};

namespace {

using SessionData = SurveyService::SessionData;

std::string random_token() {
  unsigned char bytes[16];
  if (RAND_bytes(bytes, sizeof bytes) != 1) throw Error(ErrorCode::kIo, "no entropy for a session token");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 15]);
  }
  return out;
}

SchedulerConfig scheduler_config(const ServiceConfig& config, std::uint64_t seed) {
  SchedulerConfig s;
  s.seed = seed;
  s.comparisons_per_item = config.comparisons_per_venue;
  return s;
}

// Opens the comparison stage once discovery has nothing left to ask.
void advance(SessionData& s, const CitationIndex& index, const ServiceConfig& config) {
  if (s.scheduler || next_discovery_question(s.discovery, index)) return;
  s.scheduler.emplace(s.discovery.liked, scheduler_config(config, s.seed));
}

Stage stage_of(const SessionData& s) {
  if (!s.scheduler) return Stage::kDiscovery;
  const auto& core = s.scheduler->state().core;
  return s.scheduler->stage_complete() && !core.pending ? Stage::kDone : Stage::kComparison;
}

Progress progress_of(const SessionData& s) {
  Progress p;
  p.questions_asked = s.discovery.questions_asked;
  const int target = s.discovery.config.questions_target;
  p.discovery = s.scheduler || target == 0 ? 1.0 : std::min(1.0, static_cast<double>(p.questions_asked) / target);
  if (s.scheduler) {
    const auto& st = s.scheduler->state();
    p.comparisons = static_cast<int>(st.core.history.size());
    if (s.scheduler->stage_complete()) {
      p.comparison = 1.0;
    } else {
      const int k = st.config.comparisons_per_item;
      double sum = 0;
      for (int c : st.core.comparison_count) sum += std::min(c, k);
      p.comparison = sum / (static_cast<double>(k) * static_cast<double>(st.items.size()));
    }
  }
  p.overall = (p.discovery + p.comparison) / 2;
  return p;
}

std::optional<std::pair<VenueId, VenueId>> outstanding_pair(PairScheduler& scheduler, bool continue_past) {
  if (const auto& pending = scheduler.state().core.pending) {
    const auto& items = scheduler.state().items;
    return std::pair{items[pending->first], items[pending->second]};
  }
  try {
    return scheduler.next_pair(continue_past).pair;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kExhausted) return std::nullopt;
    throw;
  }
}

NextQuestion question_of(SessionData& s, const CitationIndex& index, bool continue_past) {
  NextQuestion q;
  if (!s.scheduler) {
    q.kind = QuestionKind::kDiscovery;
    q.discovery = next_discovery_question(s.discovery, index);
    return q;
  }
  q.stage_complete = s.scheduler->stage_complete();
  q.pair = outstanding_pair(*s.scheduler, continue_past);
  q.exhausted = s.scheduler->exhausted();
  q.kind = q.pair ? QuestionKind::kComparison : QuestionKind::kDone;
  return q;
}

[[noreturn]] void stale(const std::string& message) { throw Error(ErrorCode::kStaleAnswer, message); }

// The single state transition used both live and during replay.
void apply(SessionData& s, EventType type, const json& payload, const CitationIndex& index,
           const ServiceConfig& config) {
  switch (type) {
    case EventType::kSessionCreated:
    case EventType::kStageCompleted:
      return;
    case EventType::kAspirationsSet: {
      if (s.aspirations_set) throw Error(ErrorCode::kInvalidArgument, "aspirations already set");
      std::set<VenueId> pubs;
      for (const auto& v : payload.at("publications")) pubs.insert(v.get<std::string>());
      const std::vector<VenueId> seeds{payload.at("top").get<std::string>(), payload.at("mid").get<std::string>(),
                                       payload.at("low").get<std::string>()};
      DiscoveryConfig dc;
      dc.questions_target = config.questions_target;
      s.discovery = make_discovery_state(pubs, index, seeds, dc);
      s.aspirations_set = true;
      advance(s, index, config);
      return;
    }
    case EventType::kDiscoveryAnswer: {
      if (s.scheduler) stale("discovery is finished");
      const VenueId venue = payload.at("venue");
      const auto q = next_discovery_question(s.discovery, index);
      if (!q || q->venue != venue) stale("'" + venue + "' is not the outstanding discovery question");
      s.discovery_undo.push_back(s.discovery);
      s.discovery = record_discovery(s.discovery, index, venue, payload.at("liked").get<bool>());
      s.actions.push_back(ActionKind::kDiscovery);
      break;
    }
    case EventType::kDirectAdd: {
      if (s.scheduler) throw Error(ErrorCode::kInvalidArgument, "venues can only be added during discovery");
      const VenueId venue = payload.at("venue");
      s.discovery_undo.push_back(s.discovery);
      s.discovery = direct_add(s.discovery, venue);
      s.actions.push_back(ActionKind::kDirectAdd);
      break;
    }
    case EventType::kComparisonAnswer: {
      if (!s.scheduler) stale("the comparison stage has not started");
      const VenueId first = payload.at("first"), second = payload.at("second");
      const auto pair = outstanding_pair(*s.scheduler, payload.value("continue", false));
      const bool matches = pair && ((pair->first == first && pair->second == second) ||
                                    (pair->first == second && pair->second == first));
      if (!matches) stale("(" + first + ", " + second + ") is not the outstanding pair");
      s.scheduler->record_outcome(first, second, parse_outcome(payload.at("outcome").get<std::string>()));
      s.actions.push_back(ActionKind::kComparison);
      break;
    }
    case EventType::kUndo: {
      if (s.actions.empty()) throw Error(ErrorCode::kNothingToUndo, "nothing to undo");
      const ActionKind last = s.actions.back();
      if (last == ActionKind::kComparison) {
        s.scheduler->undo();
      } else {
        s.scheduler.reset();
        s.discovery = std::move(s.discovery_undo.back());
        s.discovery_undo.pop_back();
      }
      s.actions.pop_back();
      break;
    }
  }
  ++s.answers;
  advance(s, index, config);
}

json answer_payload(const SessionAnswer& a, bool continue_past) {
  if (a.kind == QuestionKind::kDiscovery) return json{{"venue", a.venue}, {"liked", a.liked}};
  if (a.kind == QuestionKind::kComparison) {
    return json{{"first", a.first},
                {"second", a.second},
                {"outcome", std::string(outcome_token(a.outcome))},
                {"continue", continue_past}};
  }
  throw Error(ErrorCode::kInvalidArgument, "answers must be discovery or comparison answers");
}

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kDiscovery: return "discovery";
    case Stage::kComparison: return "comparison";
    case Stage::kDone: return "done";
  }
  return "?";
}

std::string_view question_kind_name(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::kDiscovery: return "discovery";
    case QuestionKind::kComparison: return "comparison";
    case QuestionKind::kDone: return "done";
  }
  return "?";
}

std::vector<ScoreRow> score_rows(const RankScores& scores, const std::vector<VenueId>& venues) {
  std::vector<VenueId> shown;
  if (venues.empty()) {
    shown = scores.items;
  } else {
    for (const auto& v : venues) {
      if (scores.index_of(v)) shown.push_back(v);
    }
  }
  std::map<VenueId, double> value;
  std::vector<double> values;
  for (const auto& v : shown) {
    const std::size_t i = *scores.index_of(v);
    const double x = scores.rescaled_scores ? (*scores.rescaled_scores)[i] : scores.raw_scores[i];
    value[v] = x;
    values.push_back(x);
  }
  const auto normalized = normalize_min_max(values);
  const auto ranks = ordinal_ranks(value, std::set<VenueId>(shown.begin(), shown.end()));
  std::vector<ScoreRow> rows;
  for (std::size_t k = 0; k < shown.size(); ++k) rows.push_back({shown[k], values[k], normalized[k], ranks.at(shown[k])});
  std::sort(rows.begin(), rows.end(), [](const ScoreRow& a, const ScoreRow& b) {
    return a.rank != b.rank ? a.rank < b.rank : a.venue < b.venue;
  });
  return rows;
}

SurveyService::SurveyService(ServiceConfig config, Dataset reference)
    : config_(std::move(config)), reference_(std::move(reference)), index_(CitationIndex::from_dataset(reference_)) {
  log_ = std::make_unique<EventLog>(config_.log_path);
  replay();
}

SurveyService::~SurveyService() = default;

std::unique_ptr<SurveyService> SurveyService::open(const ServiceConfig& config) {
  Dataset reference;
  if (!config.data_dir.empty()) {
    reference = load_dataset(DatasetPaths::in_directory(config.data_dir));
    auto violations = validate(reference);
    if (!violations.empty()) {
      throw Error(ErrorCode::kInvalidDataset, "reference data: " + to_string(violations.front()));
    }
  }
  return std::make_unique<SurveyService>(config, std::move(reference));
}

void SurveyService::close() { log_->close(); }

void SurveyService::replay() {
  std::map<std::string, SessionData> data;
  for (const auto& e : log_->events()) {
    const json payload = json::parse(e.payload);
    if (e.event_type == EventType::kSessionCreated) {
      SessionData s;
      s.id = e.session_id;
      s.field = payload.at("field");
      s.seed = payload.at("seed");
      data[e.session_id] = std::move(s);
      ++sessions_created_;
      continue;
    }
    auto it = data.find(e.session_id);
    if (it == data.end()) {
      throw Error(ErrorCode::kCorruptLog, "event for session " + e.session_id + " precedes its creation");
    }
    try {
      apply(it->second, e.event_type, payload, index_, config_);
    } catch (const Error& ex) {
      throw Error(ErrorCode::kCorruptLog, "replaying session " + e.session_id + " seq " + std::to_string(e.seq) +
                                              ": " + ex.what());
    }
  }
  for (auto& [id, s] : data) {
    // A session whose aspirations never reached the log was not acknowledged.
    if (!s.aspirations_set) continue;
    auto slot = std::make_shared<Slot>();
    slot->data = std::move(s);
    sessions_.emplace(id, std::move(slot));
  }
}

bool SurveyService::field_known(const std::string& field) const {
  if (field.empty()) return false;
  if (!config_.fields.empty()) return std::find(config_.fields.begin(), config_.fields.end(), field) != config_.fields.end();
  const auto fields = reference_.fields();
  return fields.empty() || std::find(fields.begin(), fields.end(), field) != fields.end();
}

std::shared_ptr<SurveyService::Slot> SurveyService::slot(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kSessionNotFound, "no session '" + session_id + "'");
  return it->second;
}

std::string SurveyService::create_session(const SessionRequest& request) {
  if (!field_known(request.field)) throw Error(ErrorCode::kUnknownField, "unknown field '" + request.field + "'");
  const auto& a = request.aspirations;
  for (const auto* v : {&a.top, &a.mid, &a.low}) {
    if (!reference_.find_venue(*v)) throw Error(ErrorCode::kUnknownVenue, "unknown venue '" + *v + "'");
  }
  if (a.top == a.mid || a.top == a.low || a.mid == a.low) {
    throw Error(ErrorCode::kInvalidArgument, "the three aspiration venues must be distinct");
  }
  for (const auto& v : request.publications) {
    if (!reference_.find_venue(v)) throw Error(ErrorCode::kUnknownVenue, "unknown publication venue '" + v + "'");
  }

  std::lock_guard create_lock(create_mutex_);
  SessionData s;
  s.id = random_token();
  s.field = request.field;
  s.seed = config_.seed + sessions_created_;
  json created{{"field", s.field}, {"seed", s.seed}, {"ordinal", sessions_created_}};
  if (request.label) created["label"] = *request.label;
  const json aspirations{{"top", a.top}, {"mid", a.mid}, {"low", a.low}, {"publications", request.publications}};
  apply(s, EventType::kAspirationsSet, aspirations, index_, config_);
  log_->append(s.id, EventType::kSessionCreated, created.dump());
  ++sessions_created_;
  log_->append(s.id, EventType::kAspirationsSet, aspirations.dump());
  auto slot = std::make_shared<Slot>();
  slot->data = std::move(s);
  const std::string id = slot->data.id;
  std::unique_lock lock(sessions_mutex_);
  sessions_.emplace(id, std::move(slot));
  return id;
}

NextQuestion SurveyService::next_question(const std::string& session_id, bool continue_past_completion) {
  auto sl = slot(session_id);
  std::lock_guard lock(sl->mutex);
  return question_of(sl->data, index_, continue_past_completion);
}

AnswerResult SurveyService::submit_answer(const std::string& session_id, const SessionAnswer& answer,
                                          bool continue_past_completion) {
  auto sl = slot(session_id);
  std::lock_guard lock(sl->mutex);
  const json payload = answer_payload(answer, continue_past_completion);
  const EventType type =
      answer.kind == QuestionKind::kDiscovery ? EventType::kDiscoveryAnswer : EventType::kComparisonAnswer;
  SessionData next = sl->data;
  apply(next, type, payload, index_, config_);
  const bool discovery_closed = !sl->data.scheduler && next.scheduler;
  const bool comparison_closed = sl->data.scheduler && !sl->data.scheduler->stage_complete() &&
                                 next.scheduler && next.scheduler->stage_complete();
  log_->append(session_id, type, payload.dump());
  sl->data = std::move(next);
  if (discovery_closed) log_->append(session_id, EventType::kStageCompleted, R"({"stage":"discovery"})");
  if (comparison_closed) log_->append(session_id, EventType::kStageCompleted, R"({"stage":"comparison"})");
  return {progress_of(sl->data), question_of(sl->data, index_, continue_past_completion)};
}

NextQuestion SurveyService::undo(const std::string& session_id) {
  auto sl = slot(session_id);
  std::lock_guard lock(sl->mutex);
  SessionData next = sl->data;
  apply(next, EventType::kUndo, json::object(), index_, config_);
  log_->append(session_id, EventType::kUndo, "{}");
  sl->data = std::move(next);
  return question_of(sl->data, index_, false);
}

Progress SurveyService::add_consideration(const std::string& session_id, const VenueId& venue) {
  if (!reference_.find_venue(venue)) throw Error(ErrorCode::kUnknownVenue, "unknown venue '" + venue + "'");
  auto sl = slot(session_id);
  std::lock_guard lock(sl->mutex);
  SessionData next = sl->data;
  const json payload{{"venue", venue}};
  apply(next, EventType::kDirectAdd, payload, index_, config_);
  log_->append(session_id, EventType::kDirectAdd, payload.dump());
  sl->data = std::move(next);
  return progress_of(sl->data);
}

std::vector<Comparison> SurveyService::field_comparisons(const std::string& field, const std::string& excluded_session) {
  auto pooled = pooled_comparisons(reference_, field, std::nullopt);
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, sl] : sessions_) {
      if (id != excluded_session) slots.push_back(sl);
    }
  }
  for (const auto& sl : slots) {
    std::lock_guard lock(sl->mutex);
    if (sl->data.field != field || !sl->data.scheduler) continue;
    auto t = sl->data.scheduler->transcript("session:" + sl->data.id);
    pooled.insert(pooled.end(), t.begin(), t.end());
  }
  return pooled;
}

RankScores SurveyService::consensus_fit(const std::string& field, const std::string& excluded_session) {
  const auto key = std::make_tuple(field, excluded_session, log_->size());
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = consensus_cache_.find(key); it != consensus_cache_.end()) return it->second;
  }
  const auto comparisons = field_comparisons(field, excluded_session);
  RankScores fit;
  if (!comparisons.empty()) {
    RankConfig rc = RankConfig::field();
    rc.alpha = config_.alpha_field;
    fit = fit_and_rescale(build_matrix(comparisons), rc);
  }
  std::lock_guard lock(cache_mutex_);
  if (consensus_cache_.size() >= 64) consensus_cache_.clear();
  consensus_cache_.emplace(key, fit);
  return fit;
}

SessionSummary SurveyService::summary(const std::string& session_id) {
  SessionSummary out;
  std::vector<VenueId> items;
  std::vector<Comparison> transcript;
  std::string field;
  {
    auto sl = slot(session_id);
    std::lock_guard lock(sl->mutex);
    const auto& s = sl->data;
    if (!s.scheduler || !s.scheduler->stage_complete()) {
      throw Error(ErrorCode::kStageIncomplete, "the comparison stage is not complete");
    }
    out.progress = progress_of(s);
    items = s.scheduler->state().items;
    transcript = s.scheduler->transcript(session_id);
    field = s.field;
  }
  RankConfig personal_config = RankConfig::individual();
  personal_config.alpha = config_.alpha_individual;
  if (!transcript.empty()) out.personal = score_rows(fit_and_rescale(build_matrix(transcript, items), personal_config));

  const auto consensus = consensus_fit(field, session_id);
  if (consensus.items.empty()) {
    out.warnings.push_back("no comparisons from other respondents in field " + field);
    return out;
  }
  out.consensus = score_rows(consensus, items);
  std::vector<VenueId> missing;
  for (const auto& v : items) {
    if (!consensus.index_of(v)) missing.push_back(v);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& v : missing) list += (list.empty() ? "" : ", ") + v;
    out.warnings.push_back("no consensus score for " + list);
  }
  return out;
}

std::vector<ScoreRow> SurveyService::field_rankings(const std::string& field) {
  if (!field_known(field)) throw Error(ErrorCode::kUnknownField, "unknown field '" + field + "'");
  const auto fit = consensus_fit(field, "");
  if (fit.items.empty()) return {};
  return score_rows(fit);
}

SessionInfo SurveyService::info(const std::string& session_id) {
  auto sl = slot(session_id);
  std::lock_guard lock(sl->mutex);
  const auto& s = sl->data;
  return {s.id, s.field, stage_of(s), s.discovery.liked, progress_of(s), s.answers};
}

std::vector<std::string> SurveyService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, sl] : sessions_) out.push_back(id);
  return out;
}

std::vector<std::pair<VenueId, std::string>> SurveyService::search_venues(const std::string& prefix,
                                                                           std::size_t limit) const {
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  const std::string p = lower(prefix);
  std::vector<std::pair<VenueId, std::string>> out;
  for (const auto& [id, venue] : reference_.venues) {
    if (out.size() >= limit) break;
    if (lower(id).starts_with(p) || lower(venue.name).starts_with(p)) out.emplace_back(id, venue.name);
  }
  return out;
}

}  // namespace prefrank
