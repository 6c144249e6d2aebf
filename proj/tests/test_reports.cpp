#include <doctest.h>

#include <functional>
#include <json.hpp>

#include "builder.hpp"
#include "prefrank/analytics/consensus.hpp"
#include "prefrank/core/dataset_io.hpp"
#include "prefrank/error.hpp"
#include "prefrank/rank/springrank.hpp"
#include "prefrank/reports/reports.hpp"
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

std::size_t col(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == name) return i;
  }
  FAIL("missing column " << name);
  return 0;
}

const std::vector<std::string>& row_where(const Table& t, const std::string& column, const std::string& value) {
  const auto c = col(t, column);
  for (const auto& row : t.rows) {
    if (row[c] == value) return row;
  }
  FAIL("no row with " << column << "=" << value);
  return t.rows.front();
}

// Three respondents who rank five venues identically, with JIF scores.
Dataset agreeing_field() {
  DatasetBuilder b;
  for (const auto& [v, jif] : std::vector<std::pair<std::string, double>>{
           {"a", 9.0}, {"b", 7.0}, {"c", 5.0}, {"d", 3.0}, {"e", 1.0}}) {
    b.venue(v, 100, jif);
  }
  for (const auto& id : {"r1", "r2", "r3"}) {
    b.respondent(id, "F", {});
    b.rank_all(id, {"a", "b", "c", "d", "e"});
  }
  return b.build();
}

}  // namespace

TEST_CASE("tables escape cells and carry comments") {
  Table t;
  t.comments = {"alpha=0"};
  t.columns = {"venue_id", "raw"};
  t.add_row({"x,y", "1"});
  CHECK(t.to_csv() == "# alpha=0\nvenue_id,raw\n\"x,y\",1\n");
  CHECK(code_of([&] { t.add_row({"only one"}); }) == ErrorCode::kInvalidArgument);

  RunManifest m{"fit", R"({"level":"field"})", "abc", 7, "0.1.0"};
  const auto line = m.line();
  REQUIRE(line.rfind("# manifest ", 0) == 0);
  const auto parsed = nlohmann::json::parse(line.substr(11));
  CHECK(parsed["config"]["level"] == "field");
  CHECK(parsed["seed"] == 7);
  CHECK(format_percent(44.449) == "44.4");
}

TEST_CASE("fit report: two venues sit one unit apart") {
  DatasetBuilder b;
  b.respondent("r", "F", {});
  b.compare("r", "a", "b", Outcome::kFirst);
  const auto d = b.build();
  const auto r = fit_report(d, R"({"level":"individual","respondent":"r"})");
  const auto& a = row_where(r.table, "venue_id", "a");
  const auto& bb = row_where(r.table, "venue_id", "b");
  CHECK(std::stod(a[col(r.table, "raw")]) - std::stod(bb[col(r.table, "raw")]) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(a[col(r.table, "ordinal_rank")] == "1");
  CHECK(bb[col(r.table, "ordinal_rank")] == "2");
  CHECK(nlohmann::json::parse(r.resolved_config)["alpha"] == 0.0);
}

TEST_CASE("fit report with leave-one-out equals the library fit") {
  DatasetBuilder b;
  b.respondent("r1", "F", {});
  b.rank_all("r1", {"a", "b", "c"});
  b.respondent("r2", "F", {});
  b.rank_all("r2", {"c", "a", "d"});
  b.respondent("r3", "F", {});
  b.compare("r3", "d", "b", Outcome::kIndifferent);
  b.compare("r3", "b", "a", Outcome::kFirst);
  const auto d = b.build();
  const auto r = fit_report(d, R"({"level":"field","respondent":"r3","loo":true})");
  const auto lib = leave_one_out_field_scores(d, "F", std::string("r3"));
  REQUIRE(r.table.rows.size() == lib.size());
  for (std::size_t i = 0; i < lib.size(); ++i) {
    CHECK(r.table.rows[i][0] == lib.items[i]);
    CHECK(r.table.rows[i][1] == format_real(lib.raw_scores[i]));
  }
  CHECK(code_of([&] { fit_report(d, R"({"level":"individual"})"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { fit_report(d, R"({"level":"field","field":"G"})"); }) == ErrorCode::kUnknownField);
  CHECK(code_of([&] { fit_report(d, R"({"lvl":"field"})"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { fit_report(d, "{"); }) == ErrorCode::kParse);
}

TEST_CASE("analyze overlap on identical sets is 100") {
  DatasetBuilder b;
  for (const auto& id : {"r1", "r2", "r3"}) b.respondent(id, "F", {"a", "b", "c"});
  const auto r = analyze_report(b.build(), "overlap", "");
  CHECK(row_where(r.table, "respondent", "mean")[col(r.table, "percent")] == "100.0");
}

TEST_CASE("analyze accuracy with JIF scores matches the library") {
  auto b = DatasetBuilder();
  for (const auto& [v, jif] : std::vector<std::pair<std::string, double>>{{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}) {
    b.venue(v, 100, jif);
  }
  b.venue("x", 100);
  b.respondent("r1", "F", {});
  b.compare("r1", "a", "b", Outcome::kFirst);
  b.compare("r1", "c", "b", Outcome::kFirst);
  b.compare("r1", "a", "x", Outcome::kFirst);
  b.respondent("r2", "F", {});
  b.compare("r2", "c", "a", Outcome::kFirst);
  b.compare("r2", "b", "c", Outcome::kIndifferent);
  const auto d = b.build();
  const auto lib = prediction_accuracy(d, "F", ScoreSource::kJif);
  const auto r = analyze_report(d, "accuracy", R"({"source":"jif","field":"F"})");
  const auto& row = r.table.rows.at(0);
  CHECK(row[col(r.table, "percent")] == format_percent(lib.percent));
  CHECK(row[col(r.table, "eligible")] == std::to_string(lib.eligible));

  const auto both = analyze_report(d, "jif-accuracy", "");
  CHECK(both.table.rows.size() == 2);
}

TEST_CASE("analyze regress recovers an exact tick-rate slope") {
  DatasetBuilder b;
  const std::vector<VenueId> order = {"a", "b", "c", "d", "e"};
  for (int k = 1; k <= 5; ++k) {
    const std::string id = "r" + std::to_string(k);
    b.respondent(id, "F", {});
    b.rank_all(id, order);
    auto& rec = b.record(id);
    rec.prestige_decile = 11 - 2 * k;  // prestige axis 2k
    rec.publications = std::set<VenueId>(order.begin(), order.begin() + k);
  }
  const auto d = b.build();
  const auto r = analyze_report(d, "regress", R"({"outcome":"tickrate","covariates":["prestige"]})");
  const auto& slope = row_where(r.table, "term", "prestige");
  CHECK(std::stod(slope[col(r.table, "estimate")]) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(std::abs(std::stod(slope[col(r.table, "std_error")])) < 1e-12);
  CHECK(slope[col(r.table, "n")] == "5");

  const auto same = analyze_report(d, "regress", R"({"outcome":"topchoice","covariates":["prestige"]})");
  CHECK(std::abs(std::stod(row_where(same.table, "term", "prestige")[col(same.table, "estimate")])) < 1e-12);

  CHECK(code_of([&] { analyze_report(d, "regress", R"({"outcome":"height"})"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { analyze_report(d, "regress", R"({"covariates":["shoe_size"]})"); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("analyses cover every field and fail when nothing is eligible") {
  const auto d = agreeing_field();
  for (const auto& name : analysis_names()) {
    if (name == "regress" || name == "tickrate") continue;
    CAPTURE(name);
    const auto r = analyze_report(d, name, "");
    CHECK_FALSE(r.table.rows.empty());
    CHECK(r.table.columns.front() == "field");
  }
  const auto agree = analyze_report(d, "agreement", R"({"field":"F"})");
  CHECK(row_where(agree.table, "respondent", "mean")[col(agree.table, "percent")] == "100.0");
  const auto viol = analyze_report(d, "violations", "");
  CHECK(viol.table.rows[0][col(viol.table, "violations")] == "0");

  CHECK(code_of([&] { analyze_report(d, "tickrate", ""); }) == ErrorCode::kNoEligibleComparisons);
  CHECK(code_of([&] { analyze_report(d, "tickrate", R"({"field":"F"})"); }) != ErrorCode::kNoEligibleComparisons);
  CHECK(code_of([&] { analyze_report(d, "overlap", R"({"field":"Nope"})"); }) == ErrorCode::kUnknownField);
  CHECK(code_of([&] { analyze_report(d, "sideways", ""); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { analyze_report(d, "topk", R"({"k":0})"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("reports are deterministic given their options") {
  const auto d = agreeing_field();
  const auto a = analyze_report(d, "accumulation", R"({"seed":5,"realizations":20})");
  const auto b = analyze_report(d, "accumulation", R"({"realizations":20,"seed":5})");
  CHECK(a.table.to_csv() == b.table.to_csv());
  CHECK(a.resolved_config == b.resolved_config);
  CHECK(a.seed == 5);
}

TEST_CASE("simulate null writes matched datasets") {
  const auto templ = agreeing_field();
  prefrank::testing::TempDir dir;
  nlohmann::json options = {{"iterations", 3}, {"seed", 11}, {"output_dir", dir.path().string()}};
  const auto r = simulate_report("null", options.dump(), &templ);
  REQUIRE(r.table.rows.size() == 3);
  for (int i = 1; i <= 3; ++i) {
    const auto& row = r.table.rows[i - 1];
    CHECK(row[col(r.table, "matches_template")] == "1");
    char name[16];
    std::snprintf(name, sizeof(name), "null-%04d", i);
    const auto loaded = load_dataset(DatasetPaths::in_directory(dir / name));
    CHECK(dataset_hash(loaded) == row[col(r.table, "dataset_hash")]);
    CHECK(loaded.comparisons.size() == templ.comparisons.size());
  }
  CHECK(code_of([] { simulate_report("null", "", nullptr); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("simulate convergence and agents") {
  const auto r = simulate_report("convergence", R"({"items":6,"sessions":4,"fractions":[0.5,1.0],"shuffles":2})",
                                 nullptr);
  CHECK(r.table.rows.size() == 4);
  for (const auto& row : r.table.rows) {
    if (row[0] == "1") CHECK(row[col(r.table, "mean_rho")] == "1");
  }
  const auto t = simulate_report("agents", R"({"agent":"transitive","items":8,"sessions":5})", nullptr);
  CHECK(t.table.rows.size() == 6);
  CHECK(row_where(t.table, "session", "all")[col(t.table, "violations")] == "0");
  CHECK(code_of([] { simulate_report("weather", "", nullptr); }) == ErrorCode::kInvalidArgument);
}
