#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "builder.hpp"
#include "oracles.hpp"
#include "prefrank/error.hpp"
#include "prefrank/stats/ols.hpp"
#include "prefrank/stats/tick_rate.hpp"

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

RegressionSpec spec_of(const std::string& y, std::vector<Covariate> covs) {
  RegressionSpec s;
  s.outcome = y;
  s.covariates = std::move(covs);
  return s;
}

// Random table: two continuous covariates and a three-level factor.
DataTable random_table(std::mt19937_64& rng, int n) {
  DataTable t;
  t.columns = {"y", "x1", "x2", "g"};
  std::normal_distribution<double> z(0, 1);
  const char* levels[] = {"a", "b", "c"};
  for (int i = 0; i < n; ++i) {
    const double x1 = z(rng), x2 = z(rng) * 3 + 1;
    const std::string g = levels[i % 3];
    const double y = 0.5 + 1.5 * x1 - 0.25 * x2 + (g == "b" ? 1.0 : g == "c" ? -2.0 : 0.0) + z(rng);
    t.add_row({y, x1, x2, g});
  }
  return t;
}

}  // namespace

TEST_CASE("noise-free line") {
  DataTable t;
  t.columns = {"y", "x"};
  for (int i = 0; i < 6; ++i) t.add_row({2.0 * i, static_cast<double>(i)});
  auto fit = fit_ols(t, spec_of("y", {{"x"}}));
  CHECK(fit.at("x").estimate == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.at("x").std_error < 1e-12);
  CHECK(fit.at("intercept").estimate == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.n == 6);
}

TEST_CASE("balanced dummy recovers the level-mean difference") {
  std::mt19937_64 rng(1);
  DataTable t;
  t.columns = {"y", "level"};
  double sum_a = 0, sum_b = 0;
  for (int i = 0; i < 20; ++i) {
    const double y = static_cast<double>(rng() % 2);
    const std::string level = i % 2 ? "b" : "a";
    (level == "a" ? sum_a : sum_b) += y;
    t.add_row({y, level});
  }
  auto fit = fit_ols(t, spec_of("y", {{"level", CovariateKind::kDummy}}));
  CHECK(fit.at("level=b").estimate == doctest::Approx(sum_b / 10 - sum_a / 10).epsilon(1e-12));
  CHECK(fit.at("intercept").estimate == doctest::Approx(sum_a / 10).epsilon(1e-12));
  CHECK(fit.reference_summary == std::vector<std::string>{"level=a"});
}

TEST_CASE("estimates and standard errors match the normal-equations oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    auto t = random_table(rng, 50);
    RegressionSpec s = spec_of("y", {{"x1"}, {"x2"}, {"g", CovariateKind::kDummy}});
    s.reference_levels["g"] = "a";
    auto fit = fit_ols(t, s);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (const auto& row : t.rows) {
      const auto& g = std::get<std::string>(row[3]);
      x.push_back({1.0, std::get<double>(row[1]), std::get<double>(row[2]), g == "b" ? 1.0 : 0.0, g == "c" ? 1.0 : 0.0});
      y.push_back(std::get<double>(row[0]));
    }
    auto oracle = testing::normal_equations(x, y);
    const std::vector<std::string> terms = {"intercept", "x1", "x2", "g=b", "g=c"};
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& c = fit.at(terms[i]);
      CHECK(std::abs(c.estimate - oracle.beta[i]) <= 1e-10);
      CHECK(std::abs(c.std_error - oracle.se[i]) <= 1e-10);
      CHECK(c.ci_low == doctest::Approx(c.estimate - 1.96 * c.std_error));
      CHECK(c.ci_high == doctest::Approx(c.estimate + 1.96 * c.std_error));
      CHECK(c.p_value == doctest::Approx(std::erfc(std::abs(c.estimate / c.std_error) / std::sqrt(2.0))));
    }
  }
}

TEST_CASE("row permutation and reference recoding") {
  std::mt19937_64 rng(5);
  auto t = random_table(rng, 40);
  RegressionSpec s = spec_of("y", {{"x1"}, {"g", CovariateKind::kDummy}});
  auto base = fit_ols(t, s);
  auto shuffled = t;
  std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
  auto again = fit_ols(shuffled, s);
  for (std::size_t i = 0; i < base.coefficients.size(); ++i) {
    CHECK(again.coefficients[i].estimate == doctest::Approx(base.coefficients[i].estimate).epsilon(1e-12));
    CHECK(again.coefficients[i].std_error == doctest::Approx(base.coefficients[i].std_error).epsilon(1e-12));
  }
  // Reference b instead of a: the a-vs-b contrast flips sign and the
  // intercept moves by it.
  s.reference_levels["g"] = "b";
  auto recoded = fit_ols(t, s);
  CHECK(recoded.at("g=a").estimate == doctest::Approx(-base.at("g=b").estimate).epsilon(1e-12));
  CHECK(recoded.at("intercept").estimate ==
        doctest::Approx(base.at("intercept").estimate + base.at("g=b").estimate).epsilon(1e-12));
  CHECK(recoded.at("x1").estimate == doctest::Approx(base.at("x1").estimate).epsilon(1e-12));
}

TEST_CASE("fit_ols errors and row handling") {
  DataTable t;
  t.columns = {"y", "x", "twice", "label"};
  for (int i = 0; i < 8; ++i) t.add_row({1.0 * (i % 3), 1.0 * i, 2.0 * i, std::string("k")});
  try {
    fit_ols(t, spec_of("y", {{"x"}, {"twice"}}));
    FAIL("expected rank deficiency");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRankDeficient);
    CHECK(std::string(e.what()).find("twice") != std::string::npos);
  }
  CHECK(code_of([&] { fit_ols(t, spec_of("y", {{"nope"}})); }) == ErrorCode::kNotFound);
  CHECK(code_of([&] { fit_ols(t, spec_of("y", {{"label"}})); }) == ErrorCode::kInvalidArgument);

  DataTable tiny;
  tiny.columns = {"y", "x"};
  tiny.add_row({1.0, 1.0});
  tiny.add_row({2.0, 2.0});
  CHECK(code_of([&] { fit_ols(tiny, spec_of("y", {{"x"}})); }) == ErrorCode::kInvalidArgument);

  tiny.add_row({Cell{}, 3.0});
  tiny.add_row({4.0, 4.0});
  auto fit = fit_ols(tiny, spec_of("y", {{"x"}}));
  CHECK(fit.n == 3);
  CHECK(fit.dropped == 1);
}

TEST_CASE("t intervals widen for small samples") {
  std::mt19937_64 rng(3);
  auto t = random_table(rng, 9);
  RegressionSpec s = spec_of("y", {{"x1"}});
  s.interval = IntervalKind::kStudentT;
  auto fit = fit_ols(t, s);
  CHECK(fit.multiplier == doctest::Approx(2.364624).epsilon(1e-5));  // t(0.975, 7)
  CHECK(interval_multiplier(IntervalKind::kNormal, 7) == 1.96);
}

TEST_CASE("prediction interval at a design point") {
  DataTable t;
  t.columns = {"y", "x"};
  const std::vector<double> ys = {1.0, 2.5, 2.9, 4.2, 5.1};
  for (int i = 0; i < 5; ++i) t.add_row({ys[i], 1.0 * i});
  auto fit = fit_ols(t, spec_of("y", {{"x"}}));
  auto at = predict(fit, {{"x", 10.0}});
  CHECK(at.value == doctest::Approx(fit.at("intercept").estimate + 10 * fit.at("x").estimate));
  const double var = fit.covariance[0][0] + 2 * 10 * fit.covariance[0][1] + 100 * fit.covariance[1][1];
  CHECK(at.std_error == doctest::Approx(std::sqrt(var)));
}

TEST_CASE("permutation null") {
  SUBCASE("constant within groups leaves the fit unchanged") {
    std::mt19937_64 rng(6);
    DataTable t;
    t.columns = {"y", "x", "group"};
    for (int i = 0; i < 30; ++i) {
      const double x = static_cast<double>(i % 3);
      t.add_row({x + std::normal_distribution<double>(0, 1)(rng), x, std::to_string(i % 3)});
    }
    auto res = permutation_null(t, spec_of("y", {{"x"}}), {.permute = "x", .within = "group", .iterations = 50});
    CHECK(res.null_values.size() == 50);
    for (double v : res.null_values) CHECK(v == doctest::Approx(res.observed).epsilon(1e-12));
    CHECK(res.inside_central_95);
  }
  SUBCASE("reproducible and exact iteration count") {
    std::mt19937_64 rng(7);
    auto t = random_table(rng, 30);
    PermutationSpec p{.permute = "x1", .within = "g", .iterations = 37, .seed = 11};
    auto a = permutation_null(t, spec_of("y", {{"x1"}}), p);
    auto b = permutation_null(t, spec_of("y", {{"x1"}}), p);
    CHECK(a.null_values.size() == 37);
    CHECK(a.null_values == b.null_values);
    p.jobs = 4;
    CHECK(permutation_null(t, spec_of("y", {{"x1"}}), p).null_values == a.null_values);
    // A strong true effect sits far outside its permutation null.
    CHECK_FALSE(a.inside_central_95);
    CHECK(a.two_sided < 0.06);
  }
  SUBCASE("independent outcome is covered at roughly 95%") {
    std::mt19937_64 rng(8);
    int covered = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
      DataTable t;
      t.columns = {"y", "x", "group"};
      std::normal_distribution<double> z(0, 1);
      for (int i = 0; i < 40; ++i) t.add_row({z(rng), z(rng), std::to_string(i % 4)});
      auto res = permutation_null(t, spec_of("y", {{"x"}}),
                                  {.permute = "x", .within = "group", .iterations = 199, .seed = rng()});
      covered += res.inside_central_95;
    }
    const double rate = static_cast<double>(covered) / trials;
    const double sigma = std::sqrt(0.95 * 0.05 / trials);
    CHECK(std::abs(rate - 0.95) <= 3 * sigma);
  }
}

TEST_CASE("Benjamini-Hochberg") {
  auto q = benjamini_hochberg({0.01, 0.04, 0.03, 0.005});
  CHECK(q[0] == doctest::Approx(0.02));
  CHECK(q[1] == doctest::Approx(0.04));
  CHECK(q[2] == doctest::Approx(0.04));
  CHECK(q[3] == doctest::Approx(0.02));
  CHECK(benjamini_hochberg({0.9, 0.8}) == std::vector<double>{0.9, 0.9});
  CHECK(benjamini_hochberg({}).empty());
}

TEST_CASE("tick rates") {
  CHECK(*tick_rate({"a", "b", "c", "d", "e", "f"}, {"a", "c", "e", "f"}) == doctest::Approx(0.6));
  CHECK(*tick_rate({"a", "b", "c"}, {}) == 0.0);
  CHECK(*tick_rate({"a", "b"}, {"b"}) == doctest::Approx(0.5));
  CHECK_FALSE(tick_rate(std::vector<VenueId>{}, {"a"}));

  std::mt19937_64 rng(9);
  const std::vector<VenueId> ranking = {"a", "b", "c", "d", "e", "f", "g"};
  for (int trial = 0; trial < 100; ++trial) {
    std::set<VenueId> small, large;
    for (const auto& v : ranking) {
      if (rng() % 3 == 0) small.insert(v);
      if (small.count(v) || rng() % 2) large.insert(v);
    }
    const double a = *tick_rate(ranking, small), b = *tick_rate(ranking, large);
    CHECK(a <= b);
    CHECK(a >= 0);
    CHECK(b <= 1);
  }
}

TEST_CASE("tick-rate regression") {
  auto build = [](const std::function<std::set<VenueId>(int)>& pubs_for_decile) {
    DatasetBuilder b;
    for (int i = 0; i < 12; ++i) {
      const std::string id = "r" + std::to_string(i);
      const int decile = i % 2 ? 1 : 10;
      b.respondent(id, "F", {}).rank_all(id, {"a", "b", "c", "d", "e", "f"});
      b.record(id).prestige_decile = decile;
      b.record(id).publications = pubs_for_decile(decile);
    }
    b.respondent("nodecile", "F", {}).rank_all("nodecile", {"a", "b"});
    return b.build();
  };
  auto constant = tick_rate_regression(build([](int) { return std::set<VenueId>{"a", "b"}; }), "F",
                                       Top5Source::kPersonal);
  CHECK(constant.slope.estimate == doctest::Approx(0).epsilon(1e-12));
  CHECK(constant.at_top_decile.value == doctest::Approx(0.4));
  CHECK(constant.n == 12);

  // Decile 1 (axis 10) publishes in the whole top five, decile 10 (axis 1)
  // in one of them: the slope is forced to (1 - 0.2) / 9.
  auto line = tick_rate_regression(build([](int d) {
                                     return d == 1 ? std::set<VenueId>{"a", "b", "c", "d", "e"} : std::set<VenueId>{"a"};
                                   }),
                                   "F", Top5Source::kField);
  CHECK(line.slope.estimate == doctest::Approx(0.8 / 9));
  CHECK(line.at_top_decile.value == doctest::Approx(1.0));

  DatasetBuilder one;
  for (auto id : {"r1", "r2", "r3"}) {
    one.respondent(id, "F", {}).rank_all(id, {"a", "b"});
    one.record(id).prestige_decile = 4;
  }
  CHECK(code_of([&] { tick_rate_regression(one.build(), "F", Top5Source::kPersonal); }) == ErrorCode::kRankDeficient);
}
