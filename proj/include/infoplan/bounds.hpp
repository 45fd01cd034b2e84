#pragma once
// Suboptimality guarantees for reduced-tree planning.
//
// The reduced planner prunes nodes whose covariance is epsilon-dominated by a
// blend of retained neighbors within state distance delta. The quantities
// here convert (epsilon, delta) into an additive bound on how much final cost
// the pruning can give away, so a caller can certify a reduced plan against
// the exhaustive optimum without ever computing the latter.

#include <cstdint>
#include <string>
#include <vector>

#include "infoplan/common.hpp"
#include "infoplan/kalman.hpp"
#include "infoplan/search.hpp"

namespace infoplan {

// Everything the bound formulas need. beta_star is the peak eigenvalue of
// the optimal covariance trajectory; in a test harness it comes from
// peak_error() of the exhaustive solution, in production the caller supplies
// it and the bound is conditional on that choice.
struct BoundInputs {
  double beta_star = 0.0;    // sup over t of lambda_max(optimal cov at t)
  double lambda_w_min = 0.0; // smallest eigenvalue of the process noise W
  int n_y = 0;               // target state dimension
  int T = 0;                 // planning horizon
  double epsilon = 0.0;      // pruning dominance slack
  double delta = 0.0;        // pruning neighborhood radius
  double L_f = 0.0;          // motion-map Lipschitz constant
  double L_m = 0.0;          // observation-information continuity constant
  double logdet_W = 0.0;     // log det of the process noise
};

// Contraction factor beta / (beta + lambda), always in (0,1).
// Throws BoundInapplicable when lambda_w_min <= 0 and std::invalid_argument
// when beta_star is nonpositive or not finite.
double eta_star(double beta_star, double lambda_w_min);

// Per-unit-epsilon cost sensitivity for delta = 0 pruning:
//   (n_y/lambda) * (1 + (beta/lambda)^2 * (1 - eta^(T-1))).
// Positive, nondecreasing in T, and bounded as T grows.
double delta_T_eps(const BoundInputs& inputs);

// Compound state-drift amplification over t steps:
//   prod_{tau=1}^{t-1} (1 + sum_{s=1}^{tau} L_f^s * L_m * delta).
// zeta(.., 1) is the empty product 1; delta = 0 gives 1 for every t. The
// product is accumulated in log space so large horizons saturate to +inf
// instead of overflowing mid-way.
double zeta(double L_f, double L_m, double delta, int t);

// Additive suboptimality bound for (epsilon, delta) pruning:
//   (zeta_T - 1) * (V_star - logdet_W) + epsilon * Delta_T
// where Delta_T generalizes delta_T_eps with zeta ratios. v_star is the
// optimal final cost (or any upper bound on it). Requires
// v_star >= logdet_W; delta = 0 reduces exactly to
// epsilon * delta_T_eps(inputs).
double bound_eps_delta(const BoundInputs& inputs, double v_star);

// Largest eigenvalue over a covariance trajectory. Feed it the optimal
// trajectory (excluding the prior) to obtain beta_star.
double peak_error(const std::vector<Covariance>& covs);

struct LipschitzEstimate {
  double L_f = 0.0;
  double L_m = 0.0;
  // Sampling can only ever observe a subset of state pairs, so these are
  // lower bounds on the true constants and a bound built from them may be
  // optimistic.
  bool lower_bound_only = true;
  std::string note;
  int skipped_pairs = 0;  // pairs with no observation information on either side
};

// Empirical maxima of the motion and observation continuity ratios over
// sample_count states drawn from scenario.sample_state. Pairs where both
// states carry zero observation information are skipped; a pair whose
// information matrices have incompatible ranges yields an infinite L_m
// (no finite constant relates them). Samples are drawn sequentially from a
// generator seeded with `seed`, so enlarging sample_count with the same seed
// only grows the pair set and the estimates are nondecreasing.
LipschitzEstimate estimate_lipschitz(const LinearScenario& scenario, int sample_count,
                                     std::uint64_t seed);

// One measured instance of the pruning-gap experiment: plan exhaustively and
// reduced on the same scenario, then compare the realized gap against the
// certified bound. The bound uses effective epsilon' = epsilon +
// options.redundancy_tol, matching what the reduced planner actually prunes
// with.
struct GapReport {
  double v_exact = 0.0;    // exhaustive final cost
  double v_reduced = 0.0;  // reduced-planner final cost
  double gap = 0.0;        // v_reduced - v_exact
  double beta_star = 0.0;  // peak eigenvalue along the exhaustive trajectory
  double bound = 0.0;      // certified ceiling for gap
  bool ok = false;         // 0 <= gap <= bound
};

GapReport measure_gap(const LinearScenario& scenario, int T, double epsilon, double delta,
                      double L_f, double L_m, const SearchOptions& options = {});

}  // namespace infoplan
