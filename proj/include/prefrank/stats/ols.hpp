#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace prefrank {

using Cell = std::variant<std::monostate, double, std::string>;  // monostate = missing

struct DataTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string& name) const;  // throws Error(kNotFound)
  void add_row(std::vector<Cell> row);
};

enum class CovariateKind { kContinuous, kDummy };
enum class IntervalKind { kNormal, kStudentT };

struct Covariate {
  std::string name;
  CovariateKind kind = CovariateKind::kContinuous;
};

struct RegressionSpec {
  std::string outcome;
  std::vector<Covariate> covariates;
  // Dummy column -> reference level; the smallest level when absent.
  std::map<std::string, std::string> reference_levels;
  IntervalKind interval = IntervalKind::kNormal;
};

struct Coefficient {
  std::string term;  // "intercept", a continuous column, or "column=level"
  double estimate = 0;
  double std_error = 0;
  double ci_low = 0;
  double ci_high = 0;
  double p_value = 1;
};

struct RegressionResult {
  std::vector<Coefficient> coefficients;
  std::size_t n = 0;
  std::size_t dropped = 0;  // rows with a missing value in a used column
  double residual_variance = 0;
  double multiplier = 1.96;  // CI half-width in standard errors
  std::vector<std::vector<double>> covariance;
  std::vector<std::string> reference_summary;  // "column=level" per dummy

  const Coefficient& at(const std::string& term) const;  // throws Error(kNotFound)
  std::size_t index_of(const std::string& term) const;
};

// Least squares with an intercept, dummy expansion against reference levels
// and complete-case row filtering. Throws Error(kRankDeficient) naming the
// first design column that is a linear combination of earlier ones, and
// Error(kInvalidArgument) unless n exceeds the number of parameters.
RegressionResult fit_ols(const DataTable& table, const RegressionSpec& spec);

struct Prediction {
  double value = 0;
  double std_error = 0;
  double ci_low = 0;
  double ci_high = 0;
};

// Mean prediction at a design row given as term -> value (intercept implied).
Prediction predict(const RegressionResult& result, const std::map<std::string, double>& at);

// Two-sided p-value and CI multiplier helpers.
double normal_two_sided_p(double z);
double student_t_two_sided_p(double t, double dof);
double interval_multiplier(IntervalKind kind, double dof, double level = 0.95);

struct PermutationSpec {
  std::string permute;  // column whose values are shuffled
  std::string within;   // grouping column
  std::string term;     // coefficient to record; defaults to `permute`
  int iterations = 10000;
  std::uint64_t seed = 0;
  int jobs = 1;  // worker threads; results do not depend on this
};

struct PermutationResult {
  double observed = 0;
  std::vector<double> null_values;  // one per iteration, in iteration order
  double lower_tail = 0;            // share of null values <= observed
  double upper_tail = 0;            // share of null values >= observed
  double two_sided = 0;             // min(1, 2 * min(lower, upper))
  double central_low = 0;           // 2.5th percentile of the null
  double central_high = 0;          // 97.5th percentile of the null
  bool inside_central_95 = false;
};

// Iteration i shuffles the permuted column within each group with a
// generator seeded by seed + i, then refits.
PermutationResult permutation_null(const DataTable& table, const RegressionSpec& spec, const PermutationSpec& perm);

// Linear-interpolation quantile of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q);

// Benjamini-Hochberg adjusted p-values, in input order.
std::vector<double> benjamini_hochberg(const std::vector<double>& p_values);

}  // namespace prefrank
