#include "prefrank/sim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "prefrank/analytics/consensus.hpp"
#include "prefrank/error.hpp"
#include "prefrank/stats/ols.hpp"

namespace prefrank {

namespace {

constexpr std::uint64_t kAgentStream = 0x5eed0a6e47ULL;

double logistic(double x) { return x >= 0 ? 1 / (1 + std::exp(-x)) : std::exp(x) / (1 + std::exp(x)); }

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2 + 1;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> scores_on(const std::vector<VenueId>& items, std::span<const Comparison> comparisons,
                              const RankConfig& config) {
  std::vector<double> out(items.size(), 0.0);
  if (comparisons.empty()) return out;
  const auto fit = fit_springrank(build_matrix(comparisons), config);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (auto idx = fit.index_of(items[i])) out[i] = fit.raw_scores[*idx];
  }
  return out;
}

struct Evaluation {
  double rho = 0;
  std::optional<AccuracyResult> accuracy;
};

Evaluation evaluate_prefix(const std::vector<VenueId>& items, const std::vector<Comparison>& ordered, std::size_t m,
                           const std::vector<double>& full, const RankConfig& config) {
  Evaluation e;
  std::span<const Comparison> head(ordered.data(), m);
  const auto partial = scores_on(items, head, config);
  e.rho = spearman_rho(partial, full);
  if (m < ordered.size()) {
    std::map<VenueId, double> map;
    for (std::size_t i = 0; i < items.size(); ++i) map[items[i]] = partial[i];
    const auto acc = score_predictions(std::span<const Comparison>(ordered.data() + m, ordered.size() - m), map);
    if (acc.eligible > 0) e.accuracy = acc;
  }
  return e;
}

}  // namespace

std::string_view agent_kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::kTransitive: return "transitive";
    case AgentKind::kLogistic: return "logistic";
    case AgentKind::kRandom: return "random";
  }
  return "?";
}

AgentKind parse_agent_kind(std::string_view token) {
  if (token == "transitive" || token == "TRANSITIVE") return AgentKind::kTransitive;
  if (token == "logistic" || token == "LOGISTIC") return AgentKind::kLogistic;
  if (token == "random" || token == "RANDOM") return AgentKind::kRandom;
  throw Error(ErrorCode::kInvalidArgument, "unknown agent kind '" + std::string(token) + "'");
}

Agent::Agent(AgentSpec spec) : spec_(std::move(spec)), rng_(spec_.seed ^ kAgentStream) {
  if (!(spec_.indifference >= 0 && spec_.indifference <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "indifference proclivity must lie in [0, 1]");
  }
  if (spec_.kind == AgentKind::kLogistic && !(spec_.beta > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "logistic agents need beta > 0");
  }
}

double Agent::utility(const VenueId& venue) const {
  auto it = spec_.utilities.find(venue);
  if (it == spec_.utilities.end()) throw Error(ErrorCode::kUnknownItem, "agent has no utility for '" + venue + "'");
  return it->second;
}

Outcome Agent::respond(const VenueId& first, const VenueId& second) {
  if (spec_.kind == AgentKind::kTransitive) {
    const double a = utility(first), b = utility(second);
    if (a == b) return Outcome::kIndifferent;
    return a > b ? Outcome::kFirst : Outcome::kSecond;
  }
  if (rng_.uniform() < spec_.indifference) return Outcome::kIndifferent;
  const double p_first =
      spec_.kind == AgentKind::kLogistic ? logistic(2 * spec_.beta * (utility(first) - utility(second))) : 0.5;
  return rng_.uniform() < p_first ? Outcome::kFirst : Outcome::kSecond;
}

std::vector<Comparison> run_agent_session(const std::vector<VenueId>& items, const AgentSpec& spec,
                                          const SchedulerConfig& scheduler, const SessionOptions& options) {
  if (items.size() < 2) throw Error(ErrorCode::kInvalidArgument, "a session needs at least two items");
  PairScheduler session(items, scheduler);
  Agent agent(spec);
  const bool keep_going = options.continue_past_completion || options.comparisons.has_value();
  while (!session.exhausted()) {
    if (options.comparisons && session.state().core.history.size() >= *options.comparisons) break;
    const auto decision = session.next_pair(keep_going);
    if (decision.complete_marker()) break;
    const auto& [first, second] = *decision.pair;
    session.record_outcome(first, second, agent.respond(first, second));
  }
  return session.transcript(options.respondent_id);
}

double indifference_proclivity(std::span<const Comparison> comparisons) {
  if (comparisons.empty()) return 0.0;
  std::size_t ties = 0;
  for (const auto& c : comparisons) ties += !c.is_strict();
  return static_cast<double>(ties) / static_cast<double>(comparisons.size());
}

Dataset generate_null_dataset(const Dataset& templ, const NullDatasetSpec& spec) {
  Dataset null = templ;
  null.comparisons.clear();
  std::uint64_t index = 0;
  for (const auto& [id, record] : templ.respondents) {
    const auto comparisons = templ.comparisons_for(id);
    const std::uint64_t session_seed = spec.seed + index++;
    if (comparisons.empty()) continue;
    const auto items = compared_items(comparisons);
    AgentSpec agent;
    agent.kind = AgentKind::kRandom;
    agent.indifference = indifference_proclivity(comparisons);
    agent.seed = session_seed;

    std::vector<Comparison> generated;
    for (std::uint64_t pass = 0; generated.size() < comparisons.size(); ++pass) {
      agent.seed = session_seed + (pass << 40);
      SessionOptions options;
      options.respondent_id = id;
      options.comparisons = comparisons.size() - generated.size();
      SchedulerConfig config;
      config.seed = session_seed + (pass << 40);
      for (auto c : run_agent_session(items, agent, config, options)) {
        c.order_index = static_cast<std::int64_t>(generated.size());
        generated.push_back(std::move(c));
      }
    }
    null.comparisons.insert(null.comparisons.end(), generated.begin(), generated.end());
  }
  std::stable_sort(null.comparisons.begin(), null.comparisons.end(), [](const auto& a, const auto& b) {
    return a.respondent_id != b.respondent_id ? a.respondent_id < b.respondent_id : a.order_index < b.order_index;
  });
  return null;
}

std::vector<std::string> check_null_matches_template(const Dataset& templ, const Dataset& null) {
  std::vector<std::string> out;
  for (const auto& [id, record] : templ.respondents) {
    const auto a = templ.comparisons_for(id);
    const auto b = null.comparisons_for(id);
    if (a.size() != b.size()) {
      out.push_back(id + ": " + std::to_string(b.size()) + " comparisons, template has " + std::to_string(a.size()));
    }
    const auto venues = compared_items(a);
    const std::set<VenueId> allowed(venues.begin(), venues.end());
    for (const auto& v : compared_items(b)) {
      if (!allowed.count(v)) out.push_back(id + ": null compares '" + v + "' outside the template venues");
    }
  }
  return out;
}

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw Error(ErrorCode::kInvalidArgument, "spearman needs equal sizes >= 2");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  if (ra == rb) return 1.0;
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1) / 2;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

const ConvergencePoint& ConvergenceResult::at(double fraction, const std::string& arm) const {
  for (const auto& p : points) {
    if (std::abs(p.fraction - fraction) < 1e-12 && p.arm == arm) return p;
  }
  throw Error(ErrorCode::kNotFound, "no convergence point for " + arm);
}

ConvergenceResult convergence_experiment(const std::vector<std::vector<Comparison>>& transcripts,
                                         const ConvergenceOptions& options) {
  for (double f : options.fractions) {
    if (!(f > 0 && f <= 1)) throw Error(ErrorCode::kInvalidArgument, "fractions must lie in (0, 1]");
  }
  if (options.shuffles < 1) throw Error(ErrorCode::kInvalidArgument, "shuffles must be positive");
  if (transcripts.empty()) throw Error(ErrorCode::kInvalidArgument, "no transcripts");

  const std::size_t nf = options.fractions.size();
  std::vector<std::vector<double>> rho_adaptive(nf), rho_shuffled(nf);
  std::vector<double> acc_credit_adaptive(nf, 0), acc_eligible_adaptive(nf, 0);
  std::vector<double> acc_credit_shuffled(nf, 0), acc_eligible_shuffled(nf, 0);

  for (std::size_t s = 0; s < transcripts.size(); ++s) {
    const auto& t = transcripts[s];
    const auto items = compared_items(t);
    const std::size_t n = items.size();
    std::set<std::pair<VenueId, VenueId>> pairs;
    for (const auto& c : t) pairs.insert(std::minmax(c.first, c.second));
    if (n < 2 || pairs.size() != n * (n - 1) / 2 || t.size() != pairs.size()) {
      throw Error(ErrorCode::kIncompleteTranscript, "session " + std::to_string(s) + " does not hold every pair once");
    }
    const auto full = scores_on(items, t, options.config);

    std::vector<std::vector<Comparison>> shuffled;
    for (int k = 0; k < options.shuffles; ++k) {
      auto copy = t;
      CounterRng rng(options.seed + s * static_cast<std::uint64_t>(options.shuffles) + static_cast<std::uint64_t>(k));
      rng.shuffle(copy);
      shuffled.push_back(std::move(copy));
    }

    for (std::size_t fi = 0; fi < nf; ++fi) {
      const auto m = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(options.fractions[fi] * static_cast<double>(t.size()) - 1e-9)));
      const auto adaptive = evaluate_prefix(items, t, m, full, options.config);
      rho_adaptive[fi].push_back(adaptive.rho);
      if (adaptive.accuracy) {
        acc_credit_adaptive[fi] += adaptive.accuracy->credit;
        acc_eligible_adaptive[fi] += static_cast<double>(adaptive.accuracy->eligible);
      }
      double rho_sum = 0;
      for (const auto& order : shuffled) {
        const auto e = evaluate_prefix(items, order, m, full, options.config);
        rho_sum += e.rho;
        if (e.accuracy) {
          acc_credit_shuffled[fi] += e.accuracy->credit;
          acc_eligible_shuffled[fi] += static_cast<double>(e.accuracy->eligible);
        }
      }
      rho_shuffled[fi].push_back(rho_sum / static_cast<double>(shuffled.size()));
    }
  }

  ConvergenceResult result;
  auto summarize = [&](double fraction, const std::string& arm, const std::vector<double>& rhos, double credit,
                       double eligible) {
    ConvergencePoint p;
    p.fraction = fraction;
    p.arm = arm;
    p.per_session_rho = rhos;
    p.mean_rho = std::accumulate(rhos.begin(), rhos.end(), 0.0) / static_cast<double>(rhos.size());
    auto sorted = rhos;
    std::sort(sorted.begin(), sorted.end());
    p.p20 = quantile_sorted(sorted, 0.2);
    p.p80 = quantile_sorted(sorted, 0.8);
    if (eligible > 0) p.mean_accuracy = 100.0 * credit / eligible;
    result.points.push_back(std::move(p));
  };
  for (std::size_t fi = 0; fi < nf; ++fi) {
    summarize(options.fractions[fi], "adaptive", rho_adaptive[fi], acc_credit_adaptive[fi], acc_eligible_adaptive[fi]);
    summarize(options.fractions[fi], "shuffled", rho_shuffled[fi], acc_credit_shuffled[fi], acc_eligible_shuffled[fi]);
  }
  return result;
}

double standard_normal(CounterRng& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
}

SyntheticSessions synthetic_logistic_sessions(std::size_t items, std::size_t sessions, double beta,
                                              double indifference, std::uint64_t seed) {
  SyntheticSessions out;
  std::vector<VenueId> ids;
  for (std::size_t i = 0; i < items; ++i) ids.push_back("v" + std::to_string(i));
  for (std::size_t s = 0; s < sessions; ++s) {
    CounterRng rng(seed + s, 1ULL << 62);
    AgentSpec agent;
    agent.kind = AgentKind::kLogistic;
    agent.beta = beta;
    agent.indifference = indifference;
    agent.seed = seed + s;
    for (const auto& id : ids) agent.utilities[id] = standard_normal(rng);
    SchedulerConfig config;
    config.seed = seed + s;
    SessionOptions options;
    options.continue_past_completion = true;
    options.respondent_id = "s" + std::to_string(s);
    out.transcripts.push_back(run_agent_session(ids, agent, config, options));
    out.utilities.push_back(agent.utilities);
  }
  return out;
}

}  // namespace prefrank
