#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prefrank {

using VenueId = std::string;

struct Venue {
  VenueId id;
  std::string name;
  std::int64_t works_count = 0;
  std::optional<double> external_score;  // Journal Impact Factor when known
  std::vector<std::string> field_tags;

  bool operator==(const Venue&) const = default;
};

enum class Outcome { kFirst, kSecond, kIndifferent };

std::string_view outcome_token(Outcome outcome);
Outcome parse_outcome(std::string_view token);

struct Comparison {
  std::string respondent_id;
  VenueId first;
  VenueId second;
  Outcome outcome = Outcome::kIndifferent;
  std::int64_t order_index = 0;

  bool is_strict() const { return outcome != Outcome::kIndifferent; }
  const VenueId& winner() const { return outcome == Outcome::kFirst ? first : second; }
  const VenueId& loser() const { return outcome == Outcome::kFirst ? second : first; }

  bool operator==(const Comparison&) const = default;
};

enum class CareerStage { kAssistant, kAssociate, kFull, kOther };
enum class Gender { kMan, kWoman, kOther };

std::string_view career_stage_token(CareerStage stage);
CareerStage parse_career_stage(std::string_view token);
std::string_view gender_token(Gender gender);
Gender parse_gender(std::string_view token);

struct Aspirations {
  VenueId top;
  VenueId mid;
  VenueId low;

  bool operator==(const Aspirations&) const = default;
};

struct RespondentRecord {
  std::string id;
  std::string field;
  CareerStage career_stage = CareerStage::kOther;
  std::optional<int> prestige_decile;  // 1 = highest prestige
  std::optional<Gender> gender;
  std::vector<VenueId> consideration_set;  // order as elicited
  std::optional<Aspirations> aspirations;
  std::set<VenueId> publications;

  bool selected(const VenueId& venue) const;

  bool operator==(const RespondentRecord&) const = default;
};

using CitationKey = std::pair<VenueId, VenueId>;  // (citing, cited)

// Immutable after load. Comparisons are kept sorted by (respondent, order).
struct Dataset {
  std::map<VenueId, Venue> venues;
  std::map<std::string, RespondentRecord> respondents;
  std::vector<Comparison> comparisons;
  std::map<CitationKey, double> citations;

  const Venue* find_venue(std::string_view id) const;
  const RespondentRecord* find_respondent(std::string_view id) const;

  std::vector<Comparison> comparisons_for(std::string_view respondent_id) const;
  std::vector<std::string> respondents_in_field(std::string_view field) const;
  std::vector<std::string> fields() const;

  bool operator==(const Dataset&) const = default;
};

}  // namespace prefrank
