#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "prefrank/core/rng.hpp"
#include "prefrank/core/types.hpp"
#include "prefrank/rank/springrank.hpp"

namespace prefrank {

enum class Round { kRandom, kBrackets, kTargeted, kFree };

std::string_view round_name(Round round);

struct SchedulerConfig {
  std::uint64_t seed = 0;
  int comparisons_per_item = 3;
  RankConfig interim = RankConfig::interim();

  bool operator==(const SchedulerConfig& o) const {
    return seed == o.seed && comparisons_per_item == o.comparisons_per_item &&
           interim.alpha == o.interim.alpha && interim.solver_tolerance == o.interim.solver_tolerance;
  }
};

using IndexPair = std::pair<std::size_t, std::size_t>;

struct RecordedComparison {
  std::size_t first = 0;
  std::size_t second = 0;
  Outcome outcome = Outcome::kIndifferent;

  bool operator==(const RecordedComparison&) const = default;
};

// Everything that evolves as a session proceeds, minus the undo stack.
struct SchedulerCore {
  Round round = Round::kRandom;
  std::set<IndexPair> asked_pairs;  // (i, j) with i < j, answered
  std::vector<int> comparison_count;
  std::set<std::size_t> undefeated_pool;
  std::set<std::size_t> winless_pool;
  CounterRng rng;
  std::vector<IndexPair> matching;  // round-one pairs in serving order
  std::size_t matching_next = 0;
  bool matching_built = false;
  std::optional<IndexPair> pending;  // issued orientation
  std::vector<RecordedComparison> history;

  bool operator==(const SchedulerCore&) const = default;
};

struct UndoEntry {
  IndexPair pair;
  Outcome outcome;
  SchedulerCore prior;

  bool operator==(const UndoEntry&) const = default;
};

struct SchedulerState {
  std::vector<VenueId> items;
  SchedulerConfig config;
  SchedulerCore core;
  std::vector<UndoEntry> undo_stack;

  bool operator==(const SchedulerState&) const = default;
};

struct PairDecision {
  std::optional<std::pair<VenueId, VenueId>> pair;  // empty: stage complete, nothing issued
  bool stage_complete = false;

  bool complete_marker() const { return !pair.has_value(); }
};

// Three-round adaptive pairing for one respondent:
//  - kRandom: one seeded random perfect matching (odd leftover deferred);
//  - kBrackets: undefeated items paired with each other until one remains,
//    then winless items likewise, fewest comparisons first;
//  - kTargeted: each item below the per-item target against its nearest
//    unasked partner in a quick interim fit.
// The stage completes once every item reaches the target or all pairs are
// used; with continue_past_completion the kFree round keeps serving the
// nearest unasked pairs until exhaustion.
class PairScheduler {
 public:
  PairScheduler(std::vector<VenueId> items, SchedulerConfig config);
  explicit PairScheduler(SchedulerState state) : state_(std::move(state)) {}

  // Idempotent while a pair is outstanding. Throws Error(kExhausted) when
  // continuing past completion with no pairs left.
  PairDecision next_pair(bool continue_past_completion = false);
  PairDecision next_pair(const RankScores& interim, bool continue_past_completion = false);

  // Accepts the outstanding pair in either orientation; outcome refers to
  // the orientation given. Throws Error(kUnexpectedPair) otherwise.
  void record_outcome(const VenueId& first, const VenueId& second, Outcome outcome);

  // Throws Error(kNothingToUndo) on an empty stack.
  void undo();

  const SchedulerState& state() const { return state_; }
  bool stage_complete() const;
  bool exhausted() const;
  std::size_t total_pairs() const;

  // Answered comparisons in order, as Comparison rows for `respondent`.
  std::vector<Comparison> transcript(const std::string& respondent = "") const;

  // Compact record: items, seed, targets, answered history and whether a
  // pair is outstanding. Restoring replays the history.
  std::string snapshot() const;
  static PairScheduler restore(const std::string& snapshot);

 private:
  PairDecision decide(const RankScores* interim, bool continue_past_completion);
  IndexPair pick_bracket(const std::set<std::size_t>& pool);
  IndexPair pick_targeted(const std::vector<double>& scores);
  IndexPair pick_free(const std::vector<double>& scores) const;
  std::vector<double> interim_scores(const RankScores* provided) const;
  bool asked(std::size_t a, std::size_t b) const;
  void recompute_pools();
  PairDecision issue(IndexPair pair);

  SchedulerState state_;
};

// Invariant violations of a state, empty when consistent.
std::vector<std::string> check_scheduler_invariants(const SchedulerState& state);

// `order_index,first,second,outcome` lines.
std::string format_transcript(const std::vector<Comparison>& comparisons);
std::vector<Comparison> parse_transcript(const std::string& text, const std::string& respondent);

}  // namespace prefrank
