#include "prefrank/rank/springrank.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prefrank/error.hpp"

namespace prefrank {

ComparisonMatrix::ComparisonMatrix(std::vector<VenueId> items)
    : items_(std::move(items)), rows_(items_.size()), in_degree_(items_.size(), 0.0) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i], i).second)
      throw Error(ErrorCode::kInvalidArgument, "duplicate item " + items_[i]);
  }
}

std::optional<std::size_t> ComparisonMatrix::index_of(const VenueId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void ComparisonMatrix::add(std::size_t winner, std::size_t loser, double weight) {
  if (winner == loser) throw Error(ErrorCode::kInvalidArgument, "self comparison " + items_[winner]);
  rows_[winner][loser] += weight;
  in_degree_[loser] += weight;
}

double ComparisonMatrix::weight(std::size_t i, std::size_t j) const {
  auto it = rows_[i].find(j);
  return it == rows_[i].end() ? 0.0 : it->second;
}

double ComparisonMatrix::out_degree(std::size_t i) const {
  double s = 0;
  for (const auto& [j, w] : rows_[i]) s += w;
  return s;
}

double ComparisonMatrix::in_degree(std::size_t i) const { return in_degree_[i]; }

double ComparisonMatrix::total_weight() const {
  double s = 0;
  for (std::size_t i = 0; i < size(); ++i) s += out_degree(i);
  return s;
}

std::vector<VenueId> compared_items(std::span<const Comparison> comparisons) {
  std::set<VenueId> ids;
  for (const auto& c : comparisons) {
    ids.insert(c.first);
    ids.insert(c.second);
  }
  return {ids.begin(), ids.end()};
}

ComparisonMatrix build_matrix(std::span<const Comparison> comparisons, std::vector<VenueId> items) {
  ComparisonMatrix m(std::move(items));
  for (const auto& c : comparisons) {
    auto a = m.index_of(c.first);
    auto b = m.index_of(c.second);
    if (!a) throw Error(ErrorCode::kUnknownItem, c.first);
    if (!b) throw Error(ErrorCode::kUnknownItem, c.second);
    switch (c.outcome) {
      case Outcome::kFirst: m.add(*a, *b, 1.0); break;
      case Outcome::kSecond: m.add(*b, *a, 1.0); break;
      case Outcome::kIndifferent:
        m.add(*a, *b, 0.5);
        m.add(*b, *a, 0.5);
        break;
    }
  }
  return m;
}

namespace {

// Symmetric system in compressed rows: diag[i] s_i + sum offdiag s_j.
struct SpringSystem {
  std::vector<double> diag;
  std::vector<std::vector<std::pair<std::size_t, double>>> offdiag;
  std::vector<double> rhs;

  std::size_t size() const { return diag.size(); }

  void multiply(const std::vector<double>& x, double ridge, std::vector<double>& y) const {
    for (std::size_t i = 0; i < size(); ++i) {
      double acc = (diag[i] + ridge) * x[i];
      for (const auto& [j, v] : offdiag[i]) acc += v * x[j];
      y[i] = acc;
    }
  }
};

SpringSystem assemble(const ComparisonMatrix& m, double alpha) {
  const std::size_t n = m.size();
  SpringSystem sys;
  sys.diag.assign(n, alpha);
  sys.rhs.assign(n, 0.0);
  sys.offdiag.resize(n);
  std::vector<std::map<std::size_t, double>> coupling(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, w] : m.row(i)) {
      sys.diag[i] += w;
      sys.diag[j] += w;
      sys.rhs[i] += w;
      sys.rhs[j] -= w;
      coupling[i][j] -= w;
      coupling[j][i] -= w;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    sys.offdiag[i].assign(coupling[i].begin(), coupling[i].end());
  }
  return sys;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> residual(const SpringSystem& sys, const std::vector<double>& x) {
  std::vector<double> r(sys.size());
  sys.multiply(x, 0.0, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = sys.rhs[i] - r[i];
  return r;
}

// Jacobi-preconditioned conjugate gradients on (system + ridge I) x = b.
std::vector<double> solve_cg(const SpringSystem& sys, double ridge, const std::vector<double>& b,
                             double tol, int max_iter, int& iterations) {
  const std::size_t n = sys.size();
  std::vector<double> x(n, 0.0), r = b, z(n), p(n), ap(n);
  std::vector<double> inv_diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = sys.diag[i] + ridge;
    inv_diag[i] = d > 0 ? 1.0 / d : 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
  for (int it = 0; it < max_iter; ++it) {
    if (inf_norm(r) <= tol) break;
    sys.multiply(p, ridge, ap);
    const double pap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
    if (!(pap > 0)) break;
    const double step = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * ap[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    ++iterations;
  }
  return x;
}

class DenseSolver {
 public:
  DenseSolver(const SpringSystem& sys, double ridge) {
    const auto n = static_cast<Eigen::Index>(sys.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      a(i, i) = sys.diag[i] + ridge;
      for (const auto& [j, v] : sys.offdiag[i]) a(i, static_cast<Eigen::Index>(j)) = v;
    }
    ldlt_.compute(a);
  }

  std::vector<double> solve(const std::vector<double>& b) const {
    Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::VectorXd x = ldlt_.solve(rhs);
    return {x.data(), x.data() + x.size()};
  }

 private:
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double stationarity_residual(const ComparisonMatrix& matrix, double alpha,
                             std::span<const double> scores) {
  SpringSystem sys = assemble(matrix, alpha);
  return inf_norm(residual(sys, {scores.begin(), scores.end()}));
}

RankScores fit_springrank(const ComparisonMatrix& matrix, const RankConfig& config) {
  if (matrix.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty comparison matrix");
  if (config.alpha < 0) throw Error(ErrorCode::kInvalidArgument, "alpha must be >= 0");
  if (!(config.epsilon > 0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");

  const SpringSystem sys = assemble(matrix, config.alpha);
  const double ridge = config.alpha == 0.0 ? config.epsilon : 0.0;
  const bool dense = config.solver == SolverKind::kDense ||
                     (config.solver == SolverKind::kAuto && matrix.size() < config.dense_below);

  RankScores out;
  out.items = matrix.items();
  out.config = config;

  std::optional<DenseSolver> direct;
  if (dense) direct.emplace(sys, ridge);
  // Inner CG solves run tighter than the acceptance tolerance so refinement
  // only has to remove the ridge bias.
  const double inner_tol = config.solver_tolerance * 1e-2;
  auto solve = [&](const std::vector<double>& b) {
    if (direct) return direct->solve(b);
    return solve_cg(sys, ridge, b, inner_tol, config.max_iterations, out.iterations);
  };

  std::vector<double> s = solve(sys.rhs);
  std::vector<double> r = residual(sys, s);
  for (int refine = 0; refine < 8 && inf_norm(r) > config.solver_tolerance; ++refine) {
    std::vector<double> delta = solve(r);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += delta[i];
    r = residual(sys, s);
  }

  if (config.alpha == 0.0) {
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    for (double& v : s) v -= mean;
    r = residual(sys, s);
  }

  out.solver_residual = inf_norm(r);
  if (!(out.solver_residual <= config.solver_tolerance)) {
    throw Error(ErrorCode::kSolverDiverged,
                "residual " + std::to_string(out.solver_residual) + " after " +
                    std::to_string(out.iterations) + " iterations");
  }
  out.raw_scores = std::move(s);
  return out;
}

double win_probability(double gap, double beta) { return stable_sigmoid(2.0 * beta * gap); }

double fit_inverse_temperature(const ComparisonMatrix& matrix, const RankScores& scores) {
  struct Edge {
    double weight;
    double gap;
  };
  std::vector<Edge> edges;
  bool any_gap = false;
  bool any_upset = false;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    auto si = scores.index_of(matrix.items()[i]);
    if (!si) throw Error(ErrorCode::kUnknownItem, matrix.items()[i]);
    for (const auto& [j, w] : matrix.row(i)) {
      auto sj = scores.index_of(matrix.items()[j]);
      if (!sj) throw Error(ErrorCode::kUnknownItem, matrix.items()[j]);
      const double gap = scores.raw_scores[*si] - scores.raw_scores[*sj];
      if (w > 0) {
        edges.push_back({w, gap});
        if (gap != 0.0) any_gap = true;
        if (gap < 0.0) any_upset = true;
      }
    }
  }
  if (!any_gap) {
    throw Error(ErrorCode::kDegenerateLikelihood, "all compared pairs have equal scores");
  }

  // Without a single upset the likelihood increases monotonically in beta.
  if (!any_upset) {
    throw Error(ErrorCode::kDegenerateLikelihood,
                "likelihood increases without bound (perfectly separated comparisons)");
  }

  // d/dbeta of the log-likelihood; strictly decreasing in beta.
  auto slope = [&](double beta) {
    double g = 0;
    for (const auto& e : edges) g += e.weight * 2.0 * e.gap * stable_sigmoid(-2.0 * beta * e.gap);
    return g;
  };

  if (slope(kBetaFloor) <= 0) {
    throw Error(ErrorCode::kDegenerateLikelihood, "maximum-likelihood beta below floor 1e-6");
  }
  double lo = kBetaFloor;
  double hi = 1.0;
  while (slope(hi) > 0) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-12 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) > 0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> normalize_min_max(std::span<const double> values) {
  if (values.empty()) return {};
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn, hi = *mx;
  std::vector<double> out(values.size(), 1.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
  }
  return out;
}

RankScores rescale(RankScores scores, double beta_hat) {
  if (!(beta_hat > 0)) throw Error(ErrorCode::kInvalidArgument, "beta_hat must be positive");
  const double factor = 2.0 * beta_hat / std::log(3.0);
  std::vector<double> rescaled(scores.raw_scores.size());
  for (std::size_t i = 0; i < rescaled.size(); ++i) rescaled[i] = scores.raw_scores[i] * factor;
  scores.inverse_temperature = beta_hat;
  scores.normalized_scores = normalize_min_max(rescaled);
  scores.rescaled_scores = std::move(rescaled);
  return scores;
}

RankScores fit_and_rescale(const ComparisonMatrix& matrix, const RankConfig& config) {
  RankScores scores = fit_springrank(matrix, config);
  try {
    const double beta = fit_inverse_temperature(matrix, scores);
    return rescale(std::move(scores), beta);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateLikelihood) throw;
  }
  scores.normalized_scores = normalize_min_max(scores.raw_scores);
  return scores;
}

std::optional<std::size_t> RankScores::index_of(const VenueId& id) const {
  auto it = std::find(items.begin(), items.end(), id);
  if (it == items.end()) return std::nullopt;
  return static_cast<std::size_t>(it - items.begin());
}

std::map<VenueId, double> RankScores::raw_map() const {
  std::map<VenueId, double> out;
  for (std::size_t i = 0; i < items.size(); ++i) out[items[i]] = raw_scores[i];
  return out;
}

std::map<VenueId, double> RankScores::normalized_map() const {
  std::map<VenueId, double> out;
  const auto norm = normalized_scores ? *normalized_scores : normalize_min_max(raw_scores);
  for (std::size_t i = 0; i < items.size(); ++i) out[items[i]] = norm[i];
  return out;
}

std::vector<Comparison> pooled_comparisons(const Dataset& dataset, const std::string& field,
                                           const std::optional<std::string>& held_out) {
  std::vector<Comparison> pool;
  for (const auto& c : dataset.comparisons) {
    if (held_out && c.respondent_id == *held_out) continue;
    if (!field.empty()) {
      const auto* r = dataset.find_respondent(c.respondent_id);
      if (!r || r->field != field) continue;
    }
    pool.push_back(c);
  }
  return pool;
}

RankScores leave_one_out_field_scores(const Dataset& dataset, const std::string& field,
                                      const std::optional<std::string>& held_out,
                                      const RankConfig& config) {
  if (field.empty()) throw Error(ErrorCode::kInvalidArgument, "field name required");
  auto pool = pooled_comparisons(dataset, field, held_out);
  if (pool.empty()) {
    throw Error(ErrorCode::kEmptyField,
                "field '" + field + "' has no comparisons" +
                    (held_out ? " after excluding " + *held_out : std::string()));
  }
  return fit_springrank(build_matrix(pool), config);
}

RankScores global_scores(const Dataset& dataset, const std::optional<std::string>& held_out,
                         const RankConfig& config) {
  auto pool = pooled_comparisons(dataset, "", held_out);
  if (pool.empty()) {
    throw Error(ErrorCode::kEmptyField,
                "no comparisons" + (held_out ? " after excluding " + *held_out : std::string()));
  }
  return fit_springrank(build_matrix(pool), config);
}

RankScores individual_scores(const Dataset& dataset, const std::string& respondent,
                             const RankConfig& config) {
  if (!dataset.find_respondent(respondent)) throw Error(ErrorCode::kNotFound, "respondent " + respondent);
  auto own = dataset.comparisons_for(respondent);
  if (own.empty()) throw Error(ErrorCode::kEmptyField, "respondent " + respondent + " has no comparisons");
  return fit_springrank(build_matrix(own), config);
}

std::map<VenueId, int> ordinal_ranks(const std::map<VenueId, double>& scores,
                                     const std::set<VenueId>& eligible, double tie_tolerance) {
  std::vector<std::pair<VenueId, double>> rows;
  for (const auto& id : eligible) {
    auto it = scores.find(id);
    if (it == scores.end()) throw Error(ErrorCode::kUnknownItem, id);
    rows.emplace_back(id, it->second);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<VenueId, int> out;
  double leader = 0;
  int rank = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k == 0 || leader - rows[k].second > tie_tolerance) {
      rank = static_cast<int>(k) + 1;
      leader = rows[k].second;
    }
    out[rows[k].first] = rank;
  }
  return out;
}

std::vector<VenueId> ranked_items(const RankScores& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores.raw_scores[a] != scores.raw_scores[b]) return scores.raw_scores[a] > scores.raw_scores[b];
    return scores.items[a] < scores.items[b];
  });
  std::vector<VenueId> out;
  for (auto i : idx) out.push_back(scores.items[i]);
  return out;
}

}  // namespace prefrank
