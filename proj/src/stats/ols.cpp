#include "prefrank/stats/ols.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "prefrank/core/dataset_io.hpp"
#include "prefrank/core/rng.hpp"
#include "prefrank/core/parallel.hpp"
#include "prefrank/error.hpp"

namespace prefrank {

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  return "";
}

bool missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

struct Design {
  std::vector<std::string> terms;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::size_t dropped = 0;
  std::vector<std::string> references;
};

Design build_design(const DataTable& table, const RegressionSpec& spec) {
  const auto y_col = table.column(spec.outcome);
  std::vector<std::size_t> cols;
  for (const auto& cov : spec.covariates) cols.push_back(table.column(cov.name));

  std::vector<std::size_t> kept;
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool complete = !missing(row[y_col]);
    for (auto c : cols) complete = complete && !missing(row[c]);
    if (complete) {
      kept.push_back(r);
    } else {
      ++dropped;
    }
  }

  Design d;
  d.dropped = dropped;
  d.terms.push_back("intercept");
  std::vector<std::function<double(const std::vector<Cell>&)>> extract;
  extract.push_back([](const auto&) { return 1.0; });
  for (std::size_t k = 0; k < spec.covariates.size(); ++k) {
    const auto& cov = spec.covariates[k];
    const auto col = cols[k];
    if (cov.kind == CovariateKind::kContinuous) {
      d.terms.push_back(cov.name);
      extract.push_back([col, name = cov.name](const std::vector<Cell>& row) {
        if (const auto* v = std::get_if<double>(&row[col])) return *v;
        throw Error(ErrorCode::kInvalidArgument, "column '" + name + "' holds a non-numeric value");
      });
      continue;
    }
    std::set<std::string> levels;
    for (auto r : kept) levels.insert(cell_text(table.rows[r][col]));
    std::string reference = levels.empty() ? "" : *levels.begin();
    if (auto it = spec.reference_levels.find(cov.name); it != spec.reference_levels.end()) {
      reference = it->second;
      if (!levels.empty() && !levels.count(reference)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "reference level '" + reference + "' does not occur in column '" + cov.name + "'");
      }
    }
    d.references.push_back(cov.name + "=" + reference);
    for (const auto& level : levels) {
      if (level == reference) continue;
      d.terms.push_back(cov.name + "=" + level);
      extract.push_back([col, level](const std::vector<Cell>& row) { return cell_text(row[col]) == level ? 1.0 : 0.0; });
    }
  }

  d.x.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(d.terms.size()));
  d.y.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& row = table.rows[kept[i]];
    const auto* yv = std::get_if<double>(&row[y_col]);
    if (!yv) throw Error(ErrorCode::kInvalidArgument, "outcome '" + spec.outcome + "' holds a non-numeric value");
    d.y(static_cast<Eigen::Index>(i)) = *yv;
    for (std::size_t j = 0; j < extract.size(); ++j) {
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = extract[j](row);
    }
  }
  return d;
}

// Index of the first column that adds no rank to the columns before it.
std::optional<std::size_t> first_dependent_column(const Eigen::MatrixXd& x) {
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  const double threshold = 1e-10 * scale * std::sqrt(static_cast<double>(std::max<Eigen::Index>(x.rows(), 1)));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (x.col(j).norm() <= threshold) return static_cast<std::size_t>(j);
    if (j == 0) continue;
    // Residual of column j after projecting out columns 0..j-1.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.leftCols(j));
    const Eigen::VectorXd coef = qr.solve(x.col(j));
    const double residual = (x.col(j) - x.leftCols(j) * coef).norm();
    if (residual <= threshold * std::max(1.0, x.col(j).norm())) return static_cast<std::size_t>(j);
  }
  return std::nullopt;
}

}  // namespace

std::size_t DataTable::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error(ErrorCode::kNotFound, "no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

void DataTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw Error(ErrorCode::kInvalidArgument, "row width does not match columns");
  rows.push_back(std::move(row));
}

std::size_t RegressionResult::index_of(const std::string& term) const {
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    if (coefficients[i].term == term) return i;
  }
  throw Error(ErrorCode::kNotFound, "no term '" + term + "'");
}

const Coefficient& RegressionResult::at(const std::string& term) const { return coefficients[index_of(term)]; }

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double student_t_two_sided_p(double t, double dof) {
  boost::math::students_t dist(dof);
  return 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double interval_multiplier(IntervalKind kind, double dof, double level) {
  const double upper = 0.5 + level / 2;
  if (kind == IntervalKind::kNormal) {
    if (level == 0.95) return 1.96;
    return boost::math::quantile(boost::math::normal(), upper);
  }
  return boost::math::quantile(boost::math::students_t(dof), upper);
}

RegressionResult fit_ols(const DataTable& table, const RegressionSpec& spec) {
  const auto design = build_design(table, spec);
  const auto n = static_cast<std::size_t>(design.x.rows());
  const auto p = static_cast<std::size_t>(design.x.cols());
  if (n <= p) {
    throw Error(ErrorCode::kInvalidArgument,
                "need more rows than parameters (" + std::to_string(n) + " rows, " + std::to_string(p) + " parameters)");
  }
  if (auto bad = first_dependent_column(design.x)) {
    throw Error(ErrorCode::kRankDeficient, "column '" + design.terms[*bad] + "' is collinear with earlier columns");
  }

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(design.x);
  const Eigen::VectorXd beta = qr.solve(design.y);
  const Eigen::VectorXd residual = design.y - design.x * beta;
  const double dof = static_cast<double>(n - p);
  const double sigma2 = residual.squaredNorm() / dof;
  const Eigen::MatrixXd r = qr.matrixQR().topRows(static_cast<Eigen::Index>(p)).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                                                       static_cast<Eigen::Index>(p)));
  const Eigen::MatrixXd xtx_inv = r_inv * r_inv.transpose();

  RegressionResult result;
  result.n = n;
  result.dropped = design.dropped;
  result.residual_variance = sigma2;
  result.multiplier = interval_multiplier(spec.interval, dof);
  result.reference_summary = design.references;
  result.covariance.assign(p, std::vector<double>(p));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      result.covariance[i][j] = sigma2 * xtx_inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    Coefficient c;
    c.term = design.terms[i];
    c.estimate = beta(static_cast<Eigen::Index>(i));
    c.std_error = std::sqrt(std::max(0.0, result.covariance[i][i]));
    c.ci_low = c.estimate - result.multiplier * c.std_error;
    c.ci_high = c.estimate + result.multiplier * c.std_error;
    if (c.std_error > 0) {
      const double stat = c.estimate / c.std_error;
      c.p_value = spec.interval == IntervalKind::kNormal ? normal_two_sided_p(stat) : student_t_two_sided_p(stat, dof);
    } else {
      c.p_value = c.estimate == 0 ? 1.0 : 0.0;
    }
    result.coefficients.push_back(c);
  }
  return result;
}

Prediction predict(const RegressionResult& result, const std::map<std::string, double>& at) {
  const std::size_t p = result.coefficients.size();
  std::vector<double> x(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    if (result.coefficients[i].term == "intercept") x[i] = 1.0;
  }
  for (const auto& [term, value] : at) x[result.index_of(term)] = value;
  Prediction out;
  double var = 0;
  for (std::size_t i = 0; i < p; ++i) {
    out.value += x[i] * result.coefficients[i].estimate;
    for (std::size_t j = 0; j < p; ++j) var += x[i] * result.covariance[i][j] * x[j];
  }
  out.std_error = std::sqrt(std::max(0.0, var));
  out.ci_low = out.value - result.multiplier * out.std_error;
  out.ci_high = out.value + result.multiplier * out.std_error;
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

PermutationResult permutation_null(const DataTable& table, const RegressionSpec& spec, const PermutationSpec& perm) {
  if (perm.iterations < 1) throw Error(ErrorCode::kInvalidArgument, "iterations must be positive");
  const auto permute_col = table.column(perm.permute);
  const auto group_col = table.column(perm.within);
  const std::string term = perm.term.empty() ? perm.permute : perm.term;

  PermutationResult result;
  result.observed = fit_ols(table, spec).at(term).estimate;

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < table.rows.size(); ++r) groups[cell_text(table.rows[r][group_col])].push_back(r);

  const std::size_t iterations = static_cast<std::size_t>(perm.iterations);
  const int jobs = std::max(1, perm.jobs);
  std::vector<DataTable> scratch(static_cast<std::size_t>(std::min<std::size_t>(iterations, jobs)), table);
  result.null_values.assign(iterations, 0.0);
  parallel_for(iterations, jobs, [&](std::size_t i, std::size_t worker) {
    DataTable& shuffled = scratch[worker];
    CounterRng rng(perm.seed + static_cast<std::uint64_t>(i));
    for (const auto& [key, members] : groups) {
      std::vector<Cell> values;
      for (auto r : members) values.push_back(table.rows[r][permute_col]);
      rng.shuffle(values);
      for (std::size_t k = 0; k < members.size(); ++k) shuffled.rows[members[k]][permute_col] = values[k];
    }
    result.null_values[i] = fit_ols(shuffled, spec).at(term).estimate;
  });

  const double count = static_cast<double>(result.null_values.size());
  // Rounding noise from refitting an identical design must not count as a
  // difference.
  const double tol = 1e-12 * std::max(1.0, std::abs(result.observed));
  double lower = 0, upper = 0;
  for (double v : result.null_values) {
    lower += v <= result.observed + tol;
    upper += v >= result.observed - tol;
  }
  result.lower_tail = lower / count;
  result.upper_tail = upper / count;
  result.two_sided = std::min(1.0, 2 * std::min(result.lower_tail, result.upper_tail));
  auto sorted = result.null_values;
  std::sort(sorted.begin(), sorted.end());
  result.central_low = quantile_sorted(sorted, 0.025);
  result.central_high = quantile_sorted(sorted, 0.975);
  result.inside_central_95 = result.observed >= result.central_low - tol && result.observed <= result.central_high + tol;
  return result;
}

std::vector<double> benjamini_hochberg(const std::vector<double>& p_values) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const auto i = order[k];
    running = std::min(running, p_values[i] * static_cast<double>(m) / static_cast<double>(k + 1));
    adjusted[i] = std::min(1.0, running);
  }
  return adjusted;
}

}  // namespace prefrank
