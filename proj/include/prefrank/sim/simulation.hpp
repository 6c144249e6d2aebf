#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefrank/core/rng.hpp"
#include "prefrank/core/types.hpp"
#include "prefrank/rank/springrank.hpp"
#include "prefrank/sched/pair_scheduler.hpp"

namespace prefrank {

enum class AgentKind { kTransitive, kLogistic, kRandom };

std::string_view agent_kind_name(AgentKind kind);
AgentKind parse_agent_kind(std::string_view token);

struct AgentSpec {
  AgentKind kind = AgentKind::kRandom;
  std::map<VenueId, double> utilities;  // TRANSITIVE and LOGISTIC
  double beta = 1.0;                    // LOGISTIC
  double indifference = 0.0;            // LOGISTIC and RANDOM
  std::uint64_t seed = 0;
};

// Answers pair questions. TRANSITIVE picks the higher utility (indifferent on
// equal utilities); LOGISTIC and RANDOM first draw indifference with the
// given probability, then a strict winner with P(first) = sigma(2 beta du)
// or one half.
class Agent {
 public:
  explicit Agent(AgentSpec spec);
  Outcome respond(const VenueId& first, const VenueId& second);
  const AgentSpec& spec() const { return spec_; }

 private:
  double utility(const VenueId& venue) const;
  AgentSpec spec_;
  CounterRng rng_;
};

struct SessionOptions {
  bool continue_past_completion = false;
  // Stop after this many answers (continuing past completion if needed).
  std::optional<std::size_t> comparisons;
  std::string respondent_id = "agent";
};

// Drives a scheduler session with an agent until stage completion, the
// requested number of comparisons, or exhaustion.
std::vector<Comparison> run_agent_session(const std::vector<VenueId>& items, const AgentSpec& agent,
                                          const SchedulerConfig& scheduler, const SessionOptions& options = {});

// Empirical tie share of a respondent's comparisons (0 when empty).
double indifference_proclivity(std::span<const Comparison> comparisons);

struct NullDatasetSpec {
  std::uint64_t seed = 0;
};

// Each template respondent gets a fresh scheduler session over the venues
// they compared, answered by a RANDOM agent whose indifference proclivity is
// their empirical tie share, run to exactly their comparison count. Sessions
// that exhaust every pair before reaching the count continue in a new
// session over the same venues.
Dataset generate_null_dataset(const Dataset& templ, const NullDatasetSpec& spec);

// Per-respondent comparison counts and venue sets, compared after
// generation; empty when the null matches its template.
std::vector<std::string> check_null_matches_template(const Dataset& templ, const Dataset& null);

// Spearman rank correlation with average ranks for ties. Identical rank
// vectors give exactly 1.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

struct ConvergenceOptions {
  std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  int shuffles = 10;
  std::uint64_t seed = 0;
  RankConfig config = RankConfig::individual();
};

struct ConvergencePoint {
  double fraction = 0;
  std::string arm;  // "adaptive" or "shuffled"
  double mean_rho = 0;
  double p20 = 0;
  double p80 = 0;
  std::optional<double> mean_accuracy;  // empty when nothing is held out
  std::vector<double> per_session_rho;  // shuffled arm: mean over shuffles
};

struct ConvergenceResult {
  std::vector<ConvergencePoint> points;  // fraction-major, adaptive first
  const ConvergencePoint& at(double fraction, const std::string& arm) const;
};

// Each transcript must hold every pair of its venues exactly once, in the
// order answered. Throws Error(kIncompleteTranscript) otherwise.
ConvergenceResult convergence_experiment(const std::vector<std::vector<Comparison>>& transcripts,
                                         const ConvergenceOptions& options = {});

struct SyntheticSessions {
  std::vector<std::vector<Comparison>> transcripts;
  std::vector<std::map<VenueId, double>> utilities;
};

// Complete C(N, 2) sessions of LOGISTIC agents with N(0, 1) utilities; the
// scheduler and agent of session i are seeded from seed + i.
SyntheticSessions synthetic_logistic_sessions(std::size_t items, std::size_t sessions, double beta,
                                              double indifference, std::uint64_t seed);

// Standard normal draw (Box-Muller) from a counter generator.
double standard_normal(CounterRng& rng);

}  // namespace prefrank
