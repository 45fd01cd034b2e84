#pragma once
// Algebraic redundancy test for covariance sets: decide whether a candidate
// covariance, inflated by epsilon * I, dominates some convex combination of a
// reference set in the Loewner order. The decision reduces to maximizing the
// smallest eigenvalue of an affine matrix pencil over the probability simplex,
// a concave nonsmooth problem solved with Frank-Wolfe iterations guided by
// the eigenvector of the smallest eigenvalue.

#include <vector>

#include <Eigen/Dense>

#include "infoplan/kalman.hpp"

namespace infoplan {

struct RedundancyQuery {
  Covariance candidate;
  std::vector<Covariance> reference_set;
  double epsilon = 0.0;  // may be +infinity, which makes every query redundant
  double tol = 1e-7;
};

struct SimplexOptimum {
  // Best found value of min-eig(candidate + eps I - sum_i alpha_i ref_i).
  // Always a certified lower bound on the true maximum.
  double lambda_star = 0.0;
  // Maximizer over the original reference_set indexing (duplicates get zero).
  VectorXd alpha;
  int iterations = 0;
};

// Maximize the smallest eigenvalue of the pencil over the simplex.
// Iteration cap 500; convergence when the best value improves by less than
// tol/10 or the Frank-Wolfe duality gap falls below tol/10.
// Throws InvalidMatrix on an empty reference set or mismatched dimensions.
SimplexOptimum max_min_eig_on_simplex(const RedundancyQuery& query);

// True when the candidate is epsilon-algebraically redundant with respect to
// the reference set: lambda_star >= -tol. Exits early once any evaluated
// alpha certifies the decision.
bool is_eps_redundant(const RedundancyQuery& query);

}  // namespace infoplan
