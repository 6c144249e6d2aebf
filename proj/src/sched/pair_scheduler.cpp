#include "prefrank/sched/pair_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "prefrank/core/dataset_io.hpp"
#include "prefrank/error.hpp"

namespace prefrank {

using nlohmann::json;

std::string_view round_name(Round round) {
  switch (round) {
    case Round::kRandom: return "random";
    case Round::kBrackets: return "brackets";
    case Round::kTargeted: return "targeted";
    case Round::kFree: return "free";
  }
  return "random";
}

namespace {

IndexPair ordered(std::size_t a, std::size_t b) { return a < b ? IndexPair{a, b} : IndexPair{b, a}; }

// Picks uniformly among the minimizers of key; keys compare exactly.
template <typename Key>
std::size_t argmin_random(const std::vector<std::size_t>& candidates, Key key, CounterRng& rng) {
  std::vector<std::size_t> best;
  auto best_key = key(candidates.front());
  for (auto c : candidates) {
    auto k = key(c);
    if (k < best_key) {
      best_key = k;
      best.clear();
    }
    if (!(best_key < k)) best.push_back(c);
  }
  return best[rng.below(best.size())];
}

}  // namespace

PairScheduler::PairScheduler(std::vector<VenueId> items, SchedulerConfig config) {
  std::set<VenueId> unique(items.begin(), items.end());
  if (unique.size() != items.size()) throw Error(ErrorCode::kInvalidArgument, "duplicate scheduler item");
  state_.items = std::move(items);
  state_.config = config;
  state_.core.rng = CounterRng(config.seed);
  state_.core.comparison_count.assign(state_.items.size(), 0);
  recompute_pools();
}

std::size_t PairScheduler::total_pairs() const {
  const std::size_t n = state_.items.size();
  return n * (n > 0 ? n - 1 : 0) / 2;
}

bool PairScheduler::exhausted() const { return state_.core.asked_pairs.size() >= total_pairs(); }

bool PairScheduler::stage_complete() const {
  if (exhausted()) return true;
  return std::all_of(state_.core.comparison_count.begin(), state_.core.comparison_count.end(),
                     [&](int c) { return c >= state_.config.comparisons_per_item; });
}

bool PairScheduler::asked(std::size_t a, std::size_t b) const {
  return state_.core.asked_pairs.count(ordered(a, b)) > 0;
}

void PairScheduler::recompute_pools() {
  const std::size_t n = state_.items.size();
  std::vector<bool> won(n), lost(n), tied(n);
  for (const auto& h : state_.core.history) {
    if (h.outcome == Outcome::kIndifferent) {
      tied[h.first] = tied[h.second] = true;
    } else {
      const auto w = h.outcome == Outcome::kFirst ? h.first : h.second;
      const auto l = h.outcome == Outcome::kFirst ? h.second : h.first;
      won[w] = true;
      lost[l] = true;
    }
  }
  auto& core = state_.core;
  core.undefeated_pool.clear();
  core.winless_pool.clear();
  for (std::size_t i = 0; i < n; ++i) {
    // Items never compared count as undefeated, which is how an odd
    // round-one leftover enters the brackets first.
    if (!lost[i] && !tied[i]) core.undefeated_pool.insert(i);
    if (core.comparison_count[i] > 0 && !won[i] && !tied[i]) core.winless_pool.insert(i);
  }
}

PairDecision PairScheduler::issue(IndexPair pair) {
  state_.core.pending = pair;
  return {std::make_pair(state_.items[pair.first], state_.items[pair.second]), stage_complete()};
}

IndexPair PairScheduler::pick_bracket(const std::set<std::size_t>& pool) {
  auto& core = state_.core;
  std::vector<std::size_t> members(pool.begin(), pool.end());
  auto count = [&](std::size_t i) { return core.comparison_count[i]; };
  const std::size_t first = argmin_random(members, count, core.rng);
  std::vector<std::size_t> partners;
  for (auto m : members)
    if (m != first && !asked(first, m)) partners.push_back(m);
  if (partners.empty()) throw Error(ErrorCode::kInvalidArgument, "bracket without an unasked pair");
  const std::size_t second = argmin_random(partners, count, core.rng);
  return {first, second};
}

IndexPair PairScheduler::pick_targeted(const std::vector<double>& scores) {
  auto& core = state_.core;
  const std::size_t n = state_.items.size();
  std::vector<std::size_t> focus;
  for (std::size_t i = 0; i < n; ++i) {
    if (core.comparison_count[i] >= state_.config.comparisons_per_item) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && !asked(i, j)) {
        focus.push_back(i);
        break;
      }
    }
  }
  const std::size_t item = argmin_random(focus, [&](std::size_t i) { return core.comparison_count[i]; }, core.rng);
  std::vector<std::size_t> partners;
  for (std::size_t j = 0; j < n; ++j)
    if (j != item && !asked(item, j)) partners.push_back(j);
  const std::size_t partner = argmin_random(
      partners,
      [&](std::size_t j) { return std::make_pair(std::abs(scores[item] - scores[j]), core.comparison_count[j]); },
      core.rng);
  return {item, partner};
}

IndexPair PairScheduler::pick_free(const std::vector<double>& scores) const {
  const std::size_t n = state_.items.size();
  IndexPair best{0, 0};
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (asked(i, j)) continue;
      const double gap = std::abs(scores[i] - scores[j]);
      if (gap < best_gap) {
        best_gap = gap;
        best = {i, j};
      }
    }
  }
  return best;
}

std::vector<double> PairScheduler::interim_scores(const RankScores* provided) const {
  const std::size_t n = state_.items.size();
  std::vector<double> out(n, 0.0);
  if (provided) {
    for (std::size_t i = 0; i < n; ++i) {
      if (auto k = provided->index_of(state_.items[i])) out[i] = provided->raw_scores[*k];
    }
    return out;
  }
  if (state_.core.history.empty()) return out;
  ComparisonMatrix m(state_.items);
  for (const auto& h : state_.core.history) {
    switch (h.outcome) {
      case Outcome::kFirst: m.add(h.first, h.second, 1.0); break;
      case Outcome::kSecond: m.add(h.second, h.first, 1.0); break;
      case Outcome::kIndifferent:
        m.add(h.first, h.second, 0.5);
        m.add(h.second, h.first, 0.5);
        break;
    }
  }
  return fit_springrank(m, state_.config.interim).raw_scores;
}

PairDecision PairScheduler::next_pair(bool continue_past_completion) {
  return decide(nullptr, continue_past_completion);
}

PairDecision PairScheduler::next_pair(const RankScores& interim, bool continue_past_completion) {
  return decide(&interim, continue_past_completion);
}

PairDecision PairScheduler::decide(const RankScores* interim, bool continue_past_completion) {
  auto& core = state_.core;
  if (core.pending) {
    return {std::make_pair(state_.items[core.pending->first], state_.items[core.pending->second]),
            stage_complete()};
  }
  if (stage_complete()) {
    if (!continue_past_completion) return {std::nullopt, true};
    if (exhausted()) throw Error(ErrorCode::kExhausted, "all pairs have been compared");
    core.round = Round::kFree;
    return issue(pick_free(interim_scores(interim)));
  }

  if (core.round == Round::kRandom) {
    if (!core.matching_built) {
      std::vector<std::size_t> order(state_.items.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      core.rng.shuffle(order);
      for (std::size_t k = 0; k + 1 < order.size(); k += 2) core.matching.emplace_back(order[k], order[k + 1]);
      core.matching_built = true;
    }
    if (core.matching_next < core.matching.size()) return issue(core.matching[core.matching_next++]);
    core.round = Round::kBrackets;
  }
  if (core.round == Round::kBrackets) {
    if (core.undefeated_pool.size() >= 2) return issue(pick_bracket(core.undefeated_pool));
    if (core.winless_pool.size() >= 2) return issue(pick_bracket(core.winless_pool));
    core.round = Round::kTargeted;
  }
  return issue(pick_targeted(interim_scores(interim)));
}

void PairScheduler::record_outcome(const VenueId& first, const VenueId& second, Outcome outcome) {
  auto& core = state_.core;
  if (!core.pending) throw Error(ErrorCode::kUnexpectedPair, first + " vs " + second + " (nothing issued)");
  const auto& [a, b] = *core.pending;
  const auto& ia = state_.items[a];
  const auto& ib = state_.items[b];
  Outcome oriented = outcome;
  if (first == ia && second == ib) {
    oriented = outcome;
  } else if (first == ib && second == ia) {
    if (outcome == Outcome::kFirst) oriented = Outcome::kSecond;
    else if (outcome == Outcome::kSecond) oriented = Outcome::kFirst;
  } else {
    throw Error(ErrorCode::kUnexpectedPair, first + " vs " + second + " (outstanding: " + ia + " vs " + ib + ")");
  }

  UndoEntry entry{*core.pending, oriented, core};
  core.history.push_back({a, b, oriented});
  core.asked_pairs.insert(ordered(a, b));
  core.comparison_count[a]++;
  core.comparison_count[b]++;
  core.pending.reset();
  recompute_pools();
  state_.undo_stack.push_back(std::move(entry));
}

void PairScheduler::undo() {
  if (state_.undo_stack.empty()) throw Error(ErrorCode::kNothingToUndo, "no recorded response");
  state_.core = std::move(state_.undo_stack.back().prior);
  state_.undo_stack.pop_back();
}

std::vector<Comparison> PairScheduler::transcript(const std::string& respondent) const {
  std::vector<Comparison> out;
  std::int64_t k = 0;
  for (const auto& h : state_.core.history) {
    out.push_back({respondent, state_.items[h.first], state_.items[h.second], h.outcome, k++});
  }
  return out;
}

std::string PairScheduler::snapshot() const {
  json history = json::array();
  for (const auto& h : state_.core.history) {
    history.push_back({h.first, h.second, std::string(outcome_token(h.outcome))});
  }
  json j = {{"items", state_.items},
            {"seed", state_.config.seed},
            {"comparisons_per_item", state_.config.comparisons_per_item},
            {"interim_alpha", state_.config.interim.alpha},
            {"interim_tolerance", state_.config.interim.solver_tolerance},
            {"history", history},
            {"pending", state_.core.pending.has_value()}};
  return j.dump();
}

PairScheduler PairScheduler::restore(const std::string& snapshot) {
  json j;
  try {
    j = json::parse(snapshot);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("scheduler snapshot: ") + e.what());
  }
  SchedulerConfig cfg;
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.comparisons_per_item = j.at("comparisons_per_item").get<int>();
  cfg.interim.alpha = j.at("interim_alpha").get<double>();
  cfg.interim.solver_tolerance = j.at("interim_tolerance").get<double>();
  PairScheduler s(j.at("items").get<std::vector<VenueId>>(), cfg);
  for (const auto& h : j.at("history")) {
    auto decision = s.next_pair(true);
    const auto& items = s.state().items;
    const auto a = h.at(0).get<std::size_t>(), b = h.at(1).get<std::size_t>();
    if (!decision.pair || decision.pair->first != items.at(a) || decision.pair->second != items.at(b)) {
      throw Error(ErrorCode::kInvalidArgument, "snapshot history diverges from the schedule");
    }
    s.record_outcome(items[a], items[b], parse_outcome(h.at(2).get<std::string>()));
  }
  if (j.at("pending").get<bool>()) s.next_pair(true);
  return s;
}

std::vector<std::string> check_scheduler_invariants(const SchedulerState& state) {
  std::vector<std::string> out;
  const auto& core = state.core;
  const std::size_t n = state.items.size();
  std::vector<int> counts(n, 0);
  for (const auto& [a, b] : core.asked_pairs) {
    if (a >= b) out.push_back("asked pair not normalized or self pair");
    if (b >= n) out.push_back("asked pair out of range");
    else {
      counts[a]++;
      counts[b]++;
    }
  }
  if (core.asked_pairs.size() != core.history.size()) out.push_back("duplicate pair in history");
  if (counts != core.comparison_count) out.push_back("comparison_count disagrees with asked_pairs");
  for (auto i : core.undefeated_pool)
    if (i >= n) out.push_back("undefeated pool outside items");
  for (auto i : core.winless_pool)
    if (i >= n) out.push_back("winless pool outside items");
  if (core.pending && core.asked_pairs.count(ordered(core.pending->first, core.pending->second)))
    out.push_back("outstanding pair was already asked");
  if (state.undo_stack.size() != core.history.size()) out.push_back("undo stack out of step with history");
  return out;
}

std::string format_transcript(const std::vector<Comparison>& comparisons) {
  std::string out;
  for (const auto& c : comparisons) {
    out += std::to_string(c.order_index) + "," + csv_escape(c.first) + "," + csv_escape(c.second) + "," +
           std::string(outcome_token(c.outcome)) + "\n";
  }
  return out;
}

std::vector<Comparison> parse_transcript(const std::string& text, const std::string& respondent) {
  std::vector<Comparison> out;
  std::istringstream in(text);
  std::size_t no = 0;
  for (std::string line; std::getline(in, line);) {
    ++no;
    if (line.empty() || line[0] == '#') continue;
    auto f = split_csv_line(line, no, "transcript");
    if (f.size() != 4) throw Error(ErrorCode::kParse, "transcript:" + std::to_string(no) + ": expected 4 fields");
    Comparison c;
    c.respondent_id = respondent;
    try {
      c.order_index = std::stoll(f[0]);
      c.outcome = parse_outcome(f[3]);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParse, "transcript:" + std::to_string(no) + ": " + e.what());
    }
    c.first = f[1];
    c.second = f[2];
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace prefrank
