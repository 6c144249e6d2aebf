#include "prefrank/core/types.hpp"

#include <algorithm>

#include "prefrank/error.hpp"

namespace prefrank {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "PARSE_ERROR";
    case ErrorCode::kDanglingReference: return "DANGLING_REFERENCE";
    case ErrorCode::kDuplicateKey: return "DUPLICATE_KEY";
    case ErrorCode::kInvalidDataset: return "INVALID_DATASET";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kUnknownItem: return "UNKNOWN_ITEM";
    case ErrorCode::kSolverDiverged: return "SOLVER_DIVERGED";
    case ErrorCode::kDegenerateLikelihood: return "DEGENERATE_LIKELIHOOD";
    case ErrorCode::kEmptyField: return "EMPTY_FIELD";
    case ErrorCode::kExhausted: return "EXHAUSTED";
    case ErrorCode::kUnexpectedPair: return "UNEXPECTED_PAIR";
    case ErrorCode::kNothingToUndo: return "NOTHING_TO_UNDO";
    case ErrorCode::kNoCandidate: return "NO_CANDIDATE";
    case ErrorCode::kUnexpectedVenue: return "UNEXPECTED_VENUE";
    case ErrorCode::kAlreadyPresent: return "ALREADY_PRESENT";
    case ErrorCode::kNoEligibleComparisons: return "NO_ELIGIBLE_COMPARISONS";
    case ErrorCode::kRankDeficient: return "RANK_DEFICIENT";
    case ErrorCode::kIncompleteTranscript: return "INCOMPLETE_TRANSCRIPT";
    case ErrorCode::kNotFound: return "NOT_FOUND";
    case ErrorCode::kStaleAnswer: return "STALE_ANSWER";
    case ErrorCode::kStageIncomplete: return "STAGE_INCOMPLETE";
    case ErrorCode::kIo: return "IO_ERROR";
    case ErrorCode::kConfig: return "CONFIG_ERROR";
    case ErrorCode::kSessionNotFound: return "SESSION_NOT_FOUND";
    case ErrorCode::kUnknownVenue: return "UNKNOWN_VENUE";
    case ErrorCode::kUnknownField: return "UNKNOWN_FIELD";
    case ErrorCode::kCorruptLog: return "CORRUPT_LOG";
  }
  return "UNKNOWN";
}

std::string_view outcome_token(Outcome outcome) {
  switch (outcome) {
    case Outcome::kFirst: return "first";
    case Outcome::kSecond: return "second";
    case Outcome::kIndifferent: return "tie";
  }
  return "tie";
}

Outcome parse_outcome(std::string_view token) {
  if (token == "first") return Outcome::kFirst;
  if (token == "second") return Outcome::kSecond;
  if (token == "tie") return Outcome::kIndifferent;
  throw Error(ErrorCode::kInvalidArgument, "unknown outcome '" + std::string(token) + "'");
}

std::string_view career_stage_token(CareerStage stage) {
  switch (stage) {
    case CareerStage::kAssistant: return "assistant";
    case CareerStage::kAssociate: return "associate";
    case CareerStage::kFull: return "full";
    case CareerStage::kOther: return "other";
  }
  return "other";
}

CareerStage parse_career_stage(std::string_view token) {
  if (token == "assistant") return CareerStage::kAssistant;
  if (token == "associate") return CareerStage::kAssociate;
  if (token == "full") return CareerStage::kFull;
  if (token == "other") return CareerStage::kOther;
  throw Error(ErrorCode::kInvalidArgument, "unknown career stage '" + std::string(token) + "'");
}

std::string_view gender_token(Gender gender) {
  switch (gender) {
    case Gender::kMan: return "man";
    case Gender::kWoman: return "woman";
    case Gender::kOther: return "other";
  }
  return "other";
}

Gender parse_gender(std::string_view token) {
  if (token == "man") return Gender::kMan;
  if (token == "woman") return Gender::kWoman;
  if (token == "other") return Gender::kOther;
  throw Error(ErrorCode::kInvalidArgument, "unknown gender '" + std::string(token) + "'");
}

bool RespondentRecord::selected(const VenueId& venue) const {
  return std::find(consideration_set.begin(), consideration_set.end(), venue) !=
         consideration_set.end();
}

const Venue* Dataset::find_venue(std::string_view id) const {
  auto it = venues.find(std::string(id));
  return it == venues.end() ? nullptr : &it->second;
}

const RespondentRecord* Dataset::find_respondent(std::string_view id) const {
  auto it = respondents.find(std::string(id));
  return it == respondents.end() ? nullptr : &it->second;
}

std::vector<Comparison> Dataset::comparisons_for(std::string_view respondent_id) const {
  std::vector<Comparison> out;
  for (const auto& c : comparisons) {
    if (c.respondent_id == respondent_id) out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(), [](const Comparison& a, const Comparison& b) {
    return a.order_index < b.order_index;
  });
  return out;
}

std::vector<std::string> Dataset::respondents_in_field(std::string_view field) const {
  std::vector<std::string> out;
  for (const auto& [id, r] : respondents) {
    if (r.field == field) out.push_back(id);
  }
  return out;
}

std::vector<std::string> Dataset::fields() const {
  std::set<std::string> seen;
  for (const auto& [id, r] : respondents) seen.insert(r.field);
  return {seen.begin(), seen.end()};
}

}  // namespace prefrank
