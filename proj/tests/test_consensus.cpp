#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "builder.hpp"
#include "oracles.hpp"
#include "prefrank/analytics/consensus.hpp"
#include "prefrank/core/dataset_io.hpp"
#include "prefrank/error.hpp"
#include "test_util.hpp"

using namespace prefrank;
using prefrank::testing::DatasetBuilder;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

Dataset random_field(std::uint64_t seed, int respondents, int venues, int comparisons_each) {
  std::mt19937_64 rng(seed);
  DatasetBuilder b;
  std::vector<double> utility(venues);
  for (int v = 0; v < venues; ++v) {
    utility[v] = std::normal_distribution<double>(0, 1)(rng);
    b.venue("v" + std::to_string(v), 100 + v, 1.0 + (rng() % 1000) / 10.0);
  }
  for (int r = 0; r < respondents; ++r) {
    const std::string id = "r" + std::to_string(r);
    b.respondent(id, "F", {});
    for (int k = 0; k < comparisons_each; ++k) {
      int a = static_cast<int>(rng() % venues), c = static_cast<int>(rng() % venues);
      if (a == c) continue;
      const double p = 1 / (1 + std::exp(-2 * (utility[a] - utility[c])));
      const double u = std::uniform_real_distribution<double>(0, 1)(rng);
      const Outcome o = u < 0.1 ? Outcome::kIndifferent : (u < 0.1 + 0.9 * p ? Outcome::kFirst : Outcome::kSecond);
      b.compare(id, "v" + std::to_string(a), "v" + std::to_string(c), o);
    }
  }
  return b.build();
}

// Leave-one-out accuracy from the dense oracle solve.
double oracle_loo_accuracy(const Dataset& d, double alpha) {
  double credit = 0;
  int eligible = 0;
  for (const auto& [rid, r] : d.respondents) {
    std::vector<Comparison> pool;
    for (const auto& c : d.comparisons)
      if (c.respondent_id != rid) pool.push_back(c);
    std::set<VenueId> items;
    for (const auto& c : pool) items.insert({c.first, c.second});
    std::vector<VenueId> order(items.begin(), items.end());
    auto idx = [&](const VenueId& v) { return std::find(order.begin(), order.end(), v) - order.begin(); };
    testing::DenseMatrix w(order.size(), std::vector<double>(order.size(), 0.0));
    for (const auto& c : pool) {
      if (c.is_strict()) {
        w[idx(c.winner())][idx(c.loser())] += 1;
      } else {
        w[idx(c.first)][idx(c.second)] += 0.5;
        w[idx(c.second)][idx(c.first)] += 0.5;
      }
    }
    const auto s = testing::springrank_oracle(w, alpha);
    for (const auto& c : d.comparisons) {
      if (c.respondent_id != rid || !c.is_strict() || !items.count(c.first) || !items.count(c.second)) continue;
      ++eligible;
      const double gap = s[idx(c.winner())] - s[idx(c.loser())];
      credit += gap > 0 ? 1.0 : (gap == 0 ? 0.5 : 0.0);
    }
  }
  return 100.0 * credit / eligible;
}

}  // namespace

TEST_CASE("accumulation curve closed cases") {
  DatasetBuilder same;
  for (auto id : {"a1", "a2", "a3"}) same.respondent(id, "F", {"a", "b", "c"});
  auto curve = accumulation_curve(same.build(), "F", 50, 1);
  CHECK(curve.k_values == std::vector<int>{1, 2, 3});
  CHECK(curve.mean_unique == std::vector<double>{3, 3, 3});

  DatasetBuilder disjoint;
  disjoint.respondent("r1", "F", {"a", "b"}).respondent("r2", "F", {"c", "d"}).respondent("r3", "F", {"e", "f"});
  CHECK(accumulation_curve(disjoint.build(), "F", 50, 1).mean_unique == std::vector<double>{2, 4, 6});
  CHECK(code_of([] { accumulation_curve(Dataset{}, "F", 10, 0); }) == ErrorCode::kEmptyField);
}

TEST_CASE("accumulation curve matches the hypergeometric expectation") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    DatasetBuilder b;
    std::map<VenueId, int> selected_by;
    double mean_size = 0;
    for (int r = 0; r < n; ++r) {
      std::vector<VenueId> set;
      for (int v = 0; v < 12; ++v)
        if (rng() % 3 == 0) set.push_back("v" + std::to_string(v));
      if (set.empty()) set.push_back("v0");
      for (const auto& v : set) ++selected_by[v];
      mean_size += static_cast<double>(set.size()) / n;
      b.respondent("r" + std::to_string(r), "F", set);
    }
    const int realizations = 10000;
    auto curve = accumulation_curve(b.build(), "F", realizations, 100 + trial);
    for (int k = 1; k <= n; ++k) {
      double exact = 0;
      for (const auto& [v, m] : selected_by)
        exact += 1 - testing::binomial(n - m, k) / testing::binomial(n, k);
      const double se = curve.stddev_unique[k - 1] / std::sqrt(realizations);
      CHECK(std::abs(curve.mean_unique[k - 1] - exact) <= 3 * se + 1e-9);
      if (k > 1) CHECK(curve.mean_unique[k - 1] >= curve.mean_unique[k - 2]);
    }
    CHECK(std::abs(curve.mean_unique[0] - mean_size) <= 3 * curve.stddev_unique[0] / std::sqrt(realizations) + 1e-9);
  }
}

TEST_CASE("accumulation curve is deterministic per seed") {
  auto d = random_field(3, 6, 10, 20);
  CHECK(accumulation_curve(d, "F", 200, 9).mean_unique == accumulation_curve(d, "F", 200, 9).mean_unique);
}

TEST_CASE("within-field overlap") {
  DatasetBuilder same;
  for (auto id : {"a1", "a2", "a3"}) same.respondent(id, "F", {"a", "b"});
  CHECK(within_field_overlap(same.build(), "F").mean == doctest::Approx(100));

  DatasetBuilder disjoint;
  disjoint.respondent("r1", "F", {"a"}).respondent("r2", "F", {"b"});
  CHECK(within_field_overlap(disjoint.build(), "F").mean == 0);

  DatasetBuilder three;
  three.respondent("r1", "F", {"a", "b", "c", "d"}).respondent("r2", "F", {"a", "b"}).respondent("r3", "F",
                                                                                               {"d", "e"});
  const auto d = three.build();
  // Brute force: r1 shares 2/4 with r2 and 1/4 with r3; r2 shares 2/2 and 0/2;
  // r3 shares 1/2 and 0/2.
  auto set_share = within_field_overlap(d, "F");
  CHECK(set_share.per_respondent.at("r1") == doctest::Approx(100 * (0.5 + 0.25) / 2));
  CHECK(set_share.per_respondent.at("r2") == doctest::Approx(50));
  CHECK(set_share.per_respondent.at("r3") == doctest::Approx(25));
  CHECK(set_share.mean == doctest::Approx((37.5 + 50 + 25) / 3));
  auto any = within_field_overlap(d, "F", OverlapMode::kAnyOther);
  CHECK(any.per_respondent.at("r1") == doctest::Approx(75));
  CHECK(any.per_respondent.at("r2") == doctest::Approx(100));
  CHECK(any.per_respondent.at("r3") == doctest::Approx(50));

  DatasetBuilder lonely;
  lonely.respondent("r1", "F", {"a"});
  CHECK(code_of([&] { within_field_overlap(lonely.build(), "F"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("overlap matches a pairwise brute force on random fields") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    DatasetBuilder b;
    std::vector<std::set<VenueId>> sets;
    const int n = 2 + static_cast<int>(rng() % 6);
    for (int r = 0; r < n; ++r) {
      std::set<VenueId> s;
      for (int v = 0; v < 8; ++v)
        if (rng() % 2) s.insert("v" + std::to_string(v));
      if (s.empty()) s.insert("v7");
      sets.push_back(s);
      b.respondent("r" + std::to_string(r), "F", {s.begin(), s.end()});
    }
    double total = 0;
    for (int i = 0; i < n; ++i) {
      double share = 0;
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        int inter = 0;
        for (const auto& v : sets[i]) inter += sets[j].count(v);
        share += static_cast<double>(inter) / sets[i].size();
      }
      total += 100 * share / (n - 1);
    }
    CHECK(within_field_overlap(b.build(), "F").mean == doctest::Approx(total / n).epsilon(1e-12));
  }
}

TEST_CASE("top-k popularity") {
  DatasetBuilder one;
  one.respondent("r1", "F", {"a"});
  CHECK(top_k_popularity(one.build(), "F", 3) == std::vector<VenueShare>{{"a", 100.0}});

  DatasetBuilder four;
  four.respondent("r1", "F", {"a", "x"})
      .respondent("r2", "F", {"b", "x"})
      .respondent("r3", "F", {"b", "x"})
      .respondent("r4", "F", {"c", "x"})
      .respondent("z", "G", {"a"});
  auto top = top_k_popularity(four.build(), "F", 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0] == VenueShare{"x", 100.0});
  CHECK(top[1] == VenueShare{"b", 50.0});
  CHECK(top[2] == VenueShare{"a", 25.0});  // tie with c broken by id
}

TEST_CASE("prediction accuracy conventions") {
  DatasetBuilder b;
  b.venue("A", 1, 5.0).venue("B", 1, 5.0).venue("C", 1, 5.0);
  b.respondent("r1", "F", {}).respondent("r2", "F", {}).respondent("r3", "F", {});
  b.compare("r1", "A", "B", Outcome::kFirst).compare("r2", "A", "B", Outcome::kFirst);
  b.compare("r3", "A", "B", Outcome::kFirst).compare("r3", "B", "C", Outcome::kIndifferent);
  const auto d = b.build();
  // Every held-out respondent's choice agrees with the others' consensus.
  auto loo = prediction_accuracy(d, "F", ScoreSource::kLeaveOneOutField);
  CHECK(loo.percent == doctest::Approx(100));
  CHECK(loo.eligible == 3);
  // One shared JIF: every prediction is a coin flip.
  CHECK(prediction_accuracy(d, "F", ScoreSource::kJif).percent == doctest::Approx(50));
  CHECK(prediction_accuracy(d, "F", ScoreSource::kGlobal).percent == doctest::Approx(100));

  DatasetBuilder none;
  none.venue("A", 1).venue("B", 1).respondent("r1", "F", {}).compare("r1", "A", "B", Outcome::kFirst);
  CHECK(code_of([&] { prediction_accuracy(none.build(), "F", ScoreSource::kJif); }) ==
        ErrorCode::kNoEligibleComparisons);
}

TEST_CASE("leave-one-out accuracy matches a dense oracle") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto d = random_field(seed, 6, 9, 25);
    const auto got = prediction_accuracy(d, "F", ScoreSource::kLeaveOneOutField);
    CHECK(got.percent == doctest::Approx(oracle_loo_accuracy(d, 20.0)).epsilon(1e-12));
    CHECK(got.percent >= 0);
    CHECK(got.percent <= 100);
  }
}

TEST_CASE("top-5 agreement") {
  const std::vector<VenueId> order = {"v0", "v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8", "v9"};
  std::vector<VenueId> reversed(order.rbegin(), order.rend());
  DatasetBuilder same;
  for (auto id : {"r1", "r2", "r3"}) same.respondent(id, "F", {}).rank_all(id, order);
  CHECK(top5_agreement(same.build(), "F").mean == doctest::Approx(100));

  DatasetBuilder opposed;
  opposed.respondent("r1", "F", {}).rank_all("r1", order);
  opposed.respondent("r2", "F", {}).rank_all("r2", order);
  opposed.respondent("x", "F", {}).rank_all("x", reversed);
  auto result = top5_agreement(opposed.build(), "F");
  CHECK(result.per_respondent.at("x") == doctest::Approx(0));

  // Fewer than five ranked venues: normalized by the set size.
  DatasetBuilder small;
  small.respondent("r1", "F", {}).rank_all("r1", {"a", "b", "c"});
  small.respondent("r2", "F", {}).rank_all("r2", {"a", "b", "c"});
  CHECK(top5_agreement(small.build(), "F").mean == doctest::Approx(100));
}

TEST_CASE("self-consistency") {
  DatasetBuilder clean;
  clean.respondent("r", "F", {}).rank_all("r", {"a", "b", "c", "d", "e"});
  auto sc = self_consistency(clean.build(), "r");
  CHECK(sc.violations == 0);
  CHECK(sc.strict == 10);
  CHECK_FALSE(sc.rank_statistic);

  std::vector<Comparison> one = {{"r", "lo", "hi", Outcome::kFirst, 0}};
  auto defined = self_consistency(one, std::map<VenueId, double>{{"lo", 0.2}, {"hi", 0.8}});
  CHECK(defined.violations == 1);
  CHECK(*defined.rank_statistic == doctest::Approx(0.8));

  // a > b twice, b > c twice, c > a once: the fit orders a > b > c and the
  // single upset rejects the top venue.
  DatasetBuilder cycle;
  cycle.respondent("r", "F", {});
  for (int k = 0; k < 2; ++k) cycle.compare("r", "a", "b", Outcome::kFirst).compare("r", "b", "c", Outcome::kFirst);
  cycle.compare("r", "c", "a", Outcome::kFirst).compare("r", "a", "c", Outcome::kIndifferent);
  auto upset = self_consistency(cycle.build(), "r");
  CHECK(upset.strict == 5);
  CHECK(upset.violations == 1);
  CHECK(upset.violation_percent == doctest::Approx(20));
  CHECK(*upset.rank_statistic == doctest::Approx(1.0));

  auto d = cycle.build();
  d.respondents["s"] = d.respondents["r"];
  d.respondents["s"].id = "s";
  for (auto c : d.comparisons_for("r")) {
    c.respondent_id = "s";
    if (c.outcome == Outcome::kFirst && c.first == "c") c.outcome = Outcome::kSecond;
    d.comparisons.push_back(c);
  }
  auto summary = consistency_summary(d, "F");
  CHECK(summary.respondents == 2);
  CHECK(summary.fully_consistent == 1);
  CHECK(summary.violations == 1);
  CHECK(summary.violation_percent == doctest::Approx(10));
  CHECK(summary.consistent_percent == doctest::Approx(50));
}

TEST_CASE("ordinal rank deltas") {
  std::map<VenueId, double> pref = {{"a", 3}, {"b", 2}, {"c", 1}};
  auto rows = ordinal_rank_delta(pref, pref);
  for (const auto& r : rows) CHECK(r.diff == 0);

  auto swapped = ordinal_rank_delta({{"a", 2}, {"b", 1}}, {{"a", 1}, {"b", 2}});
  CHECK(swapped == std::vector<RankDeltaRow>{{"a", 1, 2, 1}, {"b", 2, 1, -1}});

  // Filtering recomputes ranks on the surviving venues rather than reusing
  // the unfiltered ones.
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<VenueId, double> p, e;
    for (int v = 0; v < 8; ++v) {
      p["v" + std::to_string(v)] = std::uniform_real_distribution<double>(0, 1)(rng);
      e["v" + std::to_string(v)] = std::uniform_real_distribution<double>(0, 1)(rng);
    }
    std::map<VenueId, double> kept;
    for (const auto& [v, s] : p)
      if (rng() % 2) kept[v] = s;
    auto filtered = ordinal_rank_delta(kept, e);
    for (const auto& row : filtered) {
      int pref_rank = 1, ext_rank = 1;
      for (const auto& [v, s] : kept) {
        pref_rank += s > kept.at(row.venue);
        ext_rank += e.at(v) > e.at(row.venue);
      }
      CHECK(row.rank_pref == pref_rank);
      CHECK(row.rank_jif == ext_rank);
      CHECK(row.diff == ext_rank - pref_rank);
    }
  }
}

TEST_CASE("ordinal rank delta applies the selection filter") {
  DatasetBuilder b;
  b.venue("A", 1, 1.0).venue("B", 1, 3.0).venue("C", 1, 2.0).venue("R", 1, 9.0);
  for (int r = 0; r < 10; ++r) {
    const std::string id = "r" + std::to_string(r);
    b.respondent(id, "F", {}).rank_all(id, {"A", "B", "C"});
  }
  // R is selected by only one respondent of eleven (under 10%).
  b.respondent("z", "F", {}).rank_all("z", {"R", "A"});
  auto rows = ordinal_rank_delta(b.build(), "F", 10.0);
  CHECK(rows == std::vector<RankDeltaRow>{{"A", 1, 3, 2}, {"B", 2, 1, -1}, {"C", 3, 2, -1}});
}

TEST_CASE("normalized top-choice rank") {
  CHECK(normalized_position({"a", "b", "c"}, "a") == 1.0);
  CHECK(normalized_position({"a", "b", "c"}, "c") == 0.0);
  CHECK(normalized_position({"a", "b", "c"}, "b") == 0.5);
  CHECK(normalized_position({"a"}, "a") == 1.0);

  DatasetBuilder b;
  b.respondent("r1", "F", {}, Aspirations{"C", "B", "A"}).rank_all("r1", {"A", "B", "C"});
  b.respondent("r2", "F", {}, Aspirations{"A", "B", "C"}).rank_all("r2", {"A", "B", "C"});
  b.respondent("x", "F", {}, Aspirations{"C", "B", "A"}).rank_all("x", {"C", "B", "A"});
  const auto d = b.build();
  CHECK(top_choice_normalized_rank(d, "r1", ChoiceType::kTopPreference) == 1.0);
  CHECK(top_choice_normalized_rank(d, "x", ChoiceType::kTopPreference) == 0.0);
  CHECK(top_choice_normalized_rank(d, "x", ChoiceType::kTopAspiration) == 0.0);
  CHECK(top_choice_normalized_rank(d, "r2", ChoiceType::kTopAspiration) == 1.0);

  DatasetBuilder bare;
  bare.respondent("r", "F", {}).rank_all("r", {"A", "B"});
  bare.respondent("s", "F", {}).rank_all("s", {"A", "B"});
  CHECK(code_of([&] { top_choice_normalized_rank(bare.build(), "r", ChoiceType::kTopAspiration); }) ==
        ErrorCode::kNotFound);
}

TEST_CASE("flagship venue") {
  DatasetBuilder all;
  for (auto id : {"r1", "r2"}) all.respondent(id, "F", {"V"}, Aspirations{"V", "V", "V"});
  CHECK(flagship(all.build(), "F").venue == "V");

  DatasetBuilder nature;
  nature.venue("NAT", 1, std::nullopt, "Nature").venue("W", 1);
  for (auto id : {"r1", "r2", "r3"}) nature.respondent(id, "F", {"NAT"}, Aspirations{"NAT", "NAT", "NAT"});
  nature.respondent("r4", "F", {"W"}, Aspirations{"W", "W", "W"});
  auto f = flagship(nature.build(), "F");
  CHECK(f.venue == "W");
  CHECK(f.percent == doctest::Approx(25));
  CHECK(code_of([&] { flagship(nature.build(), "F", {"Nature", "W"}); }) == ErrorCode::kNotFound);
}

TEST_CASE("analytics on the file fixture") {
  const auto d = load_dataset(DatasetPaths::in_directory(testing::fixture("small")));
  CHECK(flagship(d, "Economics").venue == "AER");  // r1 AER, r2 QJE: tie broken by id
  auto top = top_k_popularity(d, "Economics", 3);
  CHECK(top[0] == VenueShare{"AER", 100.0});
  auto acc = prediction_accuracy(d, "Economics", ScoreSource::kLeaveOneOutField);
  CHECK(acc.percent >= 0);
  CHECK(acc.percent <= 100);
  auto jif = prediction_accuracy(d, "Economics", ScoreSource::kJif);
  CHECK(jif.eligible == 11);
}
