#include "infoplan/redundancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace infoplan {

namespace {

constexpr int kMaxIterations = 500;
constexpr int kLineSearchEvals = 40;
const double kInf = std::numeric_limits<double>::infinity();

struct PencilPoint {
  double lambda;            // smallest eigenvalue at alpha
  VectorXd exact_scores;    // v^T S_i v for the minimal eigenvector
  VectorXd smooth_scores;   // averaged over the near-minimal eigenspace
};

// Evaluate min-eig of base - sum_i alpha_i S_i together with the per-matrix
// scores that drive the Frank-Wolfe direction. The exact scores use the
// minimal eigenvector only (a true supergradient, needed for certificates);
// the smoothed scores average over eigenvectors within a small gap of the
// minimum, which keeps the iteration from stalling at kinks where the
// minimal eigenvalue is nearly multiple.
PencilPoint eval_point(const MatrixXd& base, const std::vector<const MatrixXd*>& refs,
                       const VectorXd& alpha) {
  MatrixXd x = base;
  for (int i = 0; i < alpha.size(); ++i)
    if (alpha(i) != 0.0) x.noalias() -= alpha(i) * (*refs[i]);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(x);
  const auto& evals = es.eigenvalues();
  const auto& evecs = es.eigenvectors();
  const int k = static_cast<int>(refs.size());
  const double lam = evals(0);
  const double window = 1e-7 * (1.0 + std::abs(lam));

  PencilPoint p;
  p.lambda = lam;
  p.exact_scores = VectorXd::Zero(k);
  p.smooth_scores = VectorXd::Zero(k);
  int active = 0;
  for (int j = 0; j < evals.size() && evals(j) <= lam + window; ++j) ++active;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < active; ++j) {
      double s = evecs.col(j).dot((*refs[i]) * evecs.col(j));
      if (j == 0) p.exact_scores(i) = s;
      p.smooth_scores(i) += s / active;
    }
  }
  return p;
}

double lambda_only(const MatrixXd& base, const std::vector<const MatrixXd*>& refs,
                   const VectorXd& alpha) {
  MatrixXd x = base;
  for (int i = 0; i < alpha.size(); ++i)
    if (alpha(i) != 0.0) x.noalias() -= alpha(i) * (*refs[i]);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(x, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

struct SolveState {
  double best_lambda = -kInf;
  VectorXd best_alpha;
  // Rigorous upper bound on the true maximum, from supergradient cuts.
  double upper_bound = kInf;
  int iterations = 0;
};

// Golden-section maximization of lambda along alpha + gamma * dir for
// gamma in [0, ub]. Returns the best gamma found; tracks the state best.
double line_search(const MatrixXd& base, const std::vector<const MatrixXd*>& refs,
                   const VectorXd& alpha, const VectorXd& dir, double ub,
                   SolveState& st, double& lambda_out) {
  const double inv_phi = 0.6180339887498949;
  double lo = 0.0, hi = ub;
  double g1 = hi - inv_phi * (hi - lo);
  double g2 = lo + inv_phi * (hi - lo);
  double f1 = lambda_only(base, refs, alpha + g1 * dir);
  double f2 = lambda_only(base, refs, alpha + g2 * dir);
  double best_gamma = f1 >= f2 ? g1 : g2;
  double best_f = std::max(f1, f2);
  for (int ls = 0; ls < kLineSearchEvals; ++ls) {
    if (f1 >= f2) {
      hi = g2;
      g2 = g1;
      f2 = f1;
      g1 = hi - inv_phi * (hi - lo);
      f1 = lambda_only(base, refs, alpha + g1 * dir);
      if (f1 > best_f) {
        best_f = f1;
        best_gamma = g1;
      }
    } else {
      lo = g1;
      g1 = g2;
      f1 = f2;
      g2 = lo + inv_phi * (hi - lo);
      f2 = lambda_only(base, refs, alpha + g2 * dir);
      if (f2 > best_f) {
        best_f = f2;
        best_gamma = g2;
      }
    }
  }
  if (best_f > st.best_lambda) {
    st.best_lambda = best_f;
    st.best_alpha = alpha + best_gamma * dir;
  }
  lambda_out = best_f;
  return best_gamma;
}

enum class LoopStop { Accepted, Rejected, Certified, Stalled, Budget };

// One Frank-Wolfe ascent run from the given start. Each iteration tries the
// classic step toward the most promising vertex and a pairwise step that
// sheds mass from the least promising support vertex; the pairwise move is
// what lets iterates reach a face of the simplex exactly instead of
// zigzagging toward it. accept_at / reject_below are decision thresholds:
// the run stops once the best value reaches accept_at, or once the
// supergradient upper bound proves the maximum lies below reject_below.
LoopStop ascend(const MatrixXd& base, const std::vector<const MatrixXd*>& refs,
                VectorXd alpha, double tol, double accept_at, double reject_below,
                SolveState& st) {
  const int k = static_cast<int>(refs.size());
  const double converge = tol / 10.0;
  double cur = lambda_only(base, refs, alpha);
  if (cur > st.best_lambda) {
    st.best_lambda = cur;
    st.best_alpha = alpha;
    if (st.best_lambda >= accept_at) return LoopStop::Accepted;
  }

  while (st.iterations < kMaxIterations) {
    ++st.iterations;
    const double before = st.best_lambda;
    PencilPoint p = eval_point(base, refs, alpha);
    cur = p.lambda;
    if (cur > st.best_lambda) {
      st.best_lambda = cur;
      st.best_alpha = alpha;
      if (st.best_lambda >= accept_at) return LoopStop::Accepted;
    }

    // Supergradient cut: max over the simplex of the linearization bounds
    // the true optimum (concavity), which certifies hopeless queries early.
    int j_exact = 0;
    for (int i = 1; i < k; ++i)
      if (p.exact_scores(i) < p.exact_scores(j_exact)) j_exact = i;
    const double fw_gap = alpha.dot(p.exact_scores) - p.exact_scores(j_exact);
    st.upper_bound = std::min(st.upper_bound, cur + std::max(fw_gap, 0.0));
    if (st.upper_bound < reject_below) return LoopStop::Rejected;
    if (fw_gap <= converge && cur >= st.best_lambda - converge)
      return LoopStop::Certified;  // within tol/10 of the optimum

    int dst = 0, worst = -1;
    for (int i = 1; i < k; ++i)
      if (p.smooth_scores(i) < p.smooth_scores(dst)) dst = i;
    for (int i = 0; i < k; ++i) {
      if (alpha(i) <= 0.0 || i == dst) continue;
      if (worst < 0 || p.smooth_scores(i) > p.smooth_scores(worst)) worst = i;
    }

    VectorXd fw_dir = -alpha;
    fw_dir(dst) += 1.0;
    double fw_lambda = -kInf;
    double fw_gamma = line_search(base, refs, alpha, fw_dir, 1.0, st, fw_lambda);
    if (st.best_lambda >= accept_at) return LoopStop::Accepted;

    double pw_lambda = -kInf, pw_gamma = 0.0;
    VectorXd pw_dir;
    if (worst >= 0) {
      pw_dir = VectorXd::Zero(k);
      pw_dir(worst) = -1.0;
      pw_dir(dst) = 1.0;
      pw_gamma = line_search(base, refs, alpha, pw_dir, alpha(worst), st, pw_lambda);
      if (st.best_lambda >= accept_at) return LoopStop::Accepted;
    }

    bool moved = false;
    if (pw_lambda >= fw_lambda && pw_lambda > cur) {
      // Snap to the face when essentially all mass has been transferred.
      if (alpha(worst) - pw_gamma < 1e-12) pw_gamma = alpha(worst);
      alpha += pw_gamma * pw_dir;
      alpha(worst) = std::max(alpha(worst), 0.0);
      cur = pw_lambda;
      moved = true;
    } else if (fw_lambda > cur) {
      alpha += fw_gamma * fw_dir;
      cur = fw_lambda;
      moved = true;
    } else {
      // Both preferred moves stalled; sweep the remaining pairs once.
      for (int src = 0; src < k && !moved; ++src) {
        if (alpha(src) <= 0.0) continue;
        for (int to = 0; to < k && !moved; ++to) {
          if (to == src) continue;
          VectorXd pd = VectorXd::Zero(k);
          pd(src) = -1.0;
          pd(to) = 1.0;
          double pl = -kInf;
          double pg = line_search(base, refs, alpha, pd, alpha(src), st, pl);
          if (st.best_lambda >= accept_at) return LoopStop::Accepted;
          if (pl > cur + 1e-15) {
            if (alpha(src) - pg < 1e-12) pg = alpha(src);
            alpha += pg * pd;
            alpha(src) = std::max(alpha(src), 0.0);
            cur = pl;
            moved = true;
          }
        }
      }
    }
    if (!moved) return LoopStop::Stalled;
    if (st.best_lambda - before < converge) return LoopStop::Stalled;
  }
  return LoopStop::Budget;
}

// Maximize the minimum eigenvalue of base - sum_i alpha_i refs[i] over the
// simplex. A single ascent run can stall at points where the minimum
// eigenvalue is multiple, so stalled runs are restarted from edge seeds:
// line searches along segments joining the strongest vertices, which find
// any certificate expressible as a blend of two references no matter how
// kinked the landscape is in between. All starts share the iteration cap.
SolveState solve(const MatrixXd& base, const std::vector<const MatrixXd*>& refs,
                 double tol, double accept_at, double reject_below) {
  const int k = static_cast<int>(refs.size());
  SolveState st;

  std::vector<double> vertex_lambda(k);
  int best_vertex = 0;
  for (int i = 0; i < k; ++i) {
    VectorXd alpha = VectorXd::Zero(k);
    alpha(i) = 1.0;
    vertex_lambda[i] = lambda_only(base, refs, alpha);
    if (vertex_lambda[i] > st.best_lambda) {
      st.best_lambda = vertex_lambda[i];
      st.best_alpha = alpha;
      best_vertex = i;
    }
    if (st.best_lambda >= accept_at) return st;
  }
  if (k == 1) {
    st.upper_bound = st.best_lambda;
    return st;
  }

  VectorXd start = VectorXd::Constant(k, 1.0 / k);
  if (lambda_only(base, refs, start) < vertex_lambda[best_vertex]) {
    start = VectorXd::Zero(k);
    start(best_vertex) = 1.0;
  }
  LoopStop stop = ascend(base, refs, start, tol, accept_at, reject_below, st);
  if (stop != LoopStop::Stalled) return st;

  // Edge seeding between the strongest vertices (all of them when the set
  // is small). Each improving seed gets its own ascent run.
  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (vertex_lambda[a] != vertex_lambda[b]) return vertex_lambda[a] > vertex_lambda[b];
    return a < b;
  });
  const int m = std::min(k, 6);
  const double converge = tol / 10.0;
  for (int a = 0; a < m && st.iterations < kMaxIterations; ++a) {
    for (int b = a + 1; b < m && st.iterations < kMaxIterations; ++b) {
      VectorXd origin = VectorXd::Zero(k);
      origin(order[a]) = 1.0;
      VectorXd dir = VectorXd::Zero(k);
      dir(order[a]) = -1.0;
      dir(order[b]) = 1.0;
      double seed_lambda = -kInf;
      const double prev_best = st.best_lambda;
      double gamma = line_search(base, refs, origin, dir, 1.0, st, seed_lambda);
      if (st.best_lambda >= accept_at) return st;
      if (st.best_lambda > prev_best + converge) {
        stop = ascend(base, refs, origin + gamma * dir, tol, accept_at, reject_below, st);
        if (stop != LoopStop::Stalled && stop != LoopStop::Budget) return st;
      }
    }
  }
  return st;
}

struct Prepared {
  MatrixXd base;
  std::vector<const MatrixXd*> refs;  // deduplicated
  std::vector<int> original_index;    // refs[i] came from reference_set[...]
};

Prepared prepare(const RedundancyQuery& q) {
  if (q.reference_set.empty())
    throw InvalidMatrix("redundancy query needs a non-empty reference set");
  if (!(q.epsilon >= 0.0))
    throw InvalidMatrix("redundancy epsilon must be nonnegative");
  const Index n = q.candidate.dim();
  Prepared p;
  if (!std::isinf(q.epsilon))
    p.base = q.candidate.mat() + q.epsilon * MatrixXd::Identity(n, n);
  for (size_t i = 0; i < q.reference_set.size(); ++i) {
    const MatrixXd& m = q.reference_set[i].mat();
    if (m.rows() != n) throw InvalidMatrix("redundancy reference dimension mismatch");
    bool dup = false;
    for (const MatrixXd* seen : p.refs) {
      if (std::memcmp(seen->data(), m.data(), sizeof(double) * m.size()) == 0) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      p.refs.push_back(&m);
      p.original_index.push_back(static_cast<int>(i));
    }
  }
  return p;
}

}  // namespace

SimplexOptimum max_min_eig_on_simplex(const RedundancyQuery& query) {
  Prepared p = prepare(query);
  SimplexOptimum out;
  out.alpha = VectorXd::Zero(static_cast<int>(query.reference_set.size()));
  if (std::isinf(query.epsilon)) {
    out.lambda_star = kInf;
    out.alpha(0) = 1.0;
    return out;
  }
  SolveState st = solve(p.base, p.refs, query.tol, kInf, -kInf);
  out.lambda_star = st.best_lambda;
  out.iterations = st.iterations;
  for (int i = 0; i < st.best_alpha.size(); ++i)
    out.alpha(p.original_index[i]) = st.best_alpha(i);
  return out;
}

bool is_eps_redundant(const RedundancyQuery& query) {
  if (query.reference_set.empty()) return false;  // nothing to dominate with
  Prepared p = prepare(query);
  if (std::isinf(query.epsilon)) return true;
  SolveState st = solve(p.base, p.refs, query.tol, -query.tol, -query.tol);
  return st.best_lambda >= -query.tol;
}

}  // namespace infoplan
