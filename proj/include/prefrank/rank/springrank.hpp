#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "prefrank/core/types.hpp"

namespace prefrank {

// Directed win weights over an ordered item list. Entry (i, j) accumulates
// wins of item i over item j; an indifferent response adds 0.5 both ways.
class ComparisonMatrix {
 public:
  ComparisonMatrix() = default;
  explicit ComparisonMatrix(std::vector<VenueId> items);

  const std::vector<VenueId>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::optional<std::size_t> index_of(const VenueId& id) const;

  void add(std::size_t winner, std::size_t loser, double weight);
  double weight(std::size_t i, std::size_t j) const;
  // Nonzero out-edges of item i, ordered by target index.
  const std::map<std::size_t, double>& row(std::size_t i) const { return rows_[i]; }
  double out_degree(std::size_t i) const;
  double in_degree(std::size_t i) const;
  double total_weight() const;

 private:
  std::vector<VenueId> items_;
  std::unordered_map<VenueId, std::size_t> index_;
  std::vector<std::map<std::size_t, double>> rows_;
  std::vector<double> in_degree_;
};

// Sorted, de-duplicated venues appearing in the comparisons.
std::vector<VenueId> compared_items(std::span<const Comparison> comparisons);

// Throws Error(kUnknownItem) if a comparison names a venue outside `items`.
ComparisonMatrix build_matrix(std::span<const Comparison> comparisons, std::vector<VenueId> items);
inline ComparisonMatrix build_matrix(std::span<const Comparison> comparisons) {
  return build_matrix(comparisons, compared_items(comparisons));
}

enum class SolverKind { kAuto, kConjugateGradient, kDense };

struct RankConfig {
  double alpha = 0.0;
  double epsilon = 1e-8;
  double solver_tolerance = 1e-10;
  int max_iterations = 20000;
  SolverKind solver = SolverKind::kAuto;
  // kAuto switches to the dense factorization below this many items.
  std::size_t dense_below = 64;

  static RankConfig individual() { return {}; }
  static RankConfig field() { return {.alpha = 20.0}; }
  static RankConfig interim() { return {.alpha = 2.0, .solver_tolerance = 1e-6}; }
};

struct RankScores {
  std::vector<VenueId> items;
  std::vector<double> raw_scores;
  std::optional<double> inverse_temperature;
  std::optional<std::vector<double>> rescaled_scores;
  std::optional<std::vector<double>> normalized_scores;
  RankConfig config;
  double solver_residual = 0.0;
  int iterations = 0;

  std::size_t size() const { return items.size(); }
  std::optional<std::size_t> index_of(const VenueId& id) const;
  std::map<VenueId, double> raw_map() const;
  std::map<VenueId, double> normalized_map() const;
};

// Minimizes H(s) = 1/2 sum_ij A_ij (s_i - s_j - 1)^2 + alpha/2 sum_i s_i^2 by
// solving the stationarity system
//   (d_out_i + d_in_i + alpha) s_i - sum_j (A_ij + A_ji) s_j = d_out_i - d_in_i.
// With alpha = 0 the system is singular along constants; an epsilon ridge
// makes it solvable, iterative refinement removes the ridge bias, and the
// result is mean-centered. solver_residual is the infinity-norm residual of
// the unridged system. Throws Error(kSolverDiverged) above solver_tolerance.
RankScores fit_springrank(const ComparisonMatrix& matrix, const RankConfig& config);

// Infinity norm of the stationarity residual, i.e. of grad H.
double stationarity_residual(const ComparisonMatrix& matrix, double alpha,
                             std::span<const double> scores);

// Maximum-likelihood beta under P(i beats j) = 1 / (1 + exp(-2 beta (s_i - s_j))).
// Throws Error(kDegenerateLikelihood) when beta is not identifiable: every
// weighted pair has equal scores, the optimum lies below 1e-6, or the
// likelihood keeps increasing (perfectly separated data).
double fit_inverse_temperature(const ComparisonMatrix& matrix, const RankScores& scores);

inline constexpr double kBetaFloor = 1e-6;

// Win probability of the logistic model at score gap `gap`.
double win_probability(double gap, double beta);

// rescaled = raw * 2 beta / ln 3, so a rescaled gap of one is a 75% win
// probability; normalized = min-max of rescaled onto [0, 1].
RankScores rescale(RankScores scores, double beta_hat);

// Min-max onto [0, 1]. A single item, or all-equal scores, map to 1.0.
std::vector<double> normalize_min_max(std::span<const double> values);

// fit_springrank, then beta and rescale when beta is identifiable. When it is
// not, only normalized scores are attached (min-max is scale-free).
RankScores fit_and_rescale(const ComparisonMatrix& matrix, const RankConfig& config);

// Comparisons of respondents in `field` (every field when empty), minus those
// of `held_out` when given.
std::vector<Comparison> pooled_comparisons(const Dataset& dataset, const std::string& field,
                                           const std::optional<std::string>& held_out);

// Field consensus fit on every field comparison except the held-out
// respondent's. Throws Error(kEmptyField) when nothing remains.
RankScores leave_one_out_field_scores(const Dataset& dataset, const std::string& field,
                                      const std::optional<std::string>& held_out,
                                      const RankConfig& config = RankConfig::field());

// Same pooling across all fields.
RankScores global_scores(const Dataset& dataset, const std::optional<std::string>& held_out,
                         const RankConfig& config = RankConfig::field());

// Fit on one respondent's comparisons only (alpha = 0 by default).
RankScores individual_scores(const Dataset& dataset, const std::string& respondent,
                             const RankConfig& config = RankConfig::individual());

// Competition ranks (1, 1, 3) descending by score over `eligible`. Scores
// within `tie_tolerance` of the first member of a tie group share its rank.
// Throws Error(kUnknownItem) when an eligible id has no score.
std::map<VenueId, int> ordinal_ranks(const std::map<VenueId, double>& scores,
                                     const std::set<VenueId>& eligible,
                                     double tie_tolerance = 1e-9);

// Items sorted best-first, ties broken by id.
std::vector<VenueId> ranked_items(const RankScores& scores);

}  // namespace prefrank
