#include "infoplan/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace infoplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_rates(double l_f, double l_m, double delta) {
  if (!(l_f >= 0.0)) throw std::invalid_argument("motion Lipschitz constant must be nonnegative");
  if (!(l_m >= 0.0)) throw std::invalid_argument("observation continuity constant must be nonnegative");
  if (!(delta >= 0.0)) throw std::invalid_argument("pruning radius must be nonnegative");
}

// log of zeta(t). Accumulating log1p terms keeps the value meaningful even
// when the product itself would overflow.
double log_zeta(double l_f, double l_m, double delta, int t) {
  if (t < 1) throw std::invalid_argument("zeta is defined for t >= 1");
  check_rates(l_f, l_m, delta);
  double acc = 0.0;
  double geom = 0.0;   // sum_{s=1}^{tau} L_f^s
  double power = 1.0;  // L_f^tau
  for (int tau = 1; tau <= t - 1; ++tau) {
    power *= l_f;
    geom += power;
    acc += std::log1p(l_m * delta * geom);
  }
  return acc;
}

void check_core(const BoundInputs& in) {
  if (!(in.lambda_w_min > 0.0))
    throw BoundInapplicable("bound inapplicable: process noise has no positive eigenvalue floor");
  if (!(in.beta_star > 0.0) || !std::isfinite(in.beta_star))
    throw std::invalid_argument("peak covariance eigenvalue must be positive and finite");
  if (in.n_y < 1) throw std::invalid_argument("target dimension must be at least 1");
  if (in.T < 1) throw std::invalid_argument("horizon must be at least 1");
}

// Smallest c >= 0 with M1 <= (1 + c*d) * M2 in the Loewner order, or +inf
// when no finite c works (M1 has energy outside the range of M2).
double direction_constant(const MatrixXd& m1, const MatrixXd& m2, double d) {
  const Index n = m2.rows();
  if (m2.isZero(1e-14)) return kInf;  // both-zero pairs are skipped upstream

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m2);
  if (es.info() != Eigen::Success) throw InvalidMatrix("eigendecomposition failed");
  const VectorXd& ev = es.eigenvalues();
  const double ev_max = ev(n - 1);
  const double thresh = 1e-12 * std::max(ev_max, 1.0);

  Index first_active = 0;
  while (first_active < n && ev(first_active) <= thresh) ++first_active;
  const Index rank = n - first_active;
  if (rank == 0) return kInf;

  const MatrixXd u = es.eigenvectors().rightCols(rank);
  if (rank < n) {
    // Any component of M1 off the range of M2 cannot be dominated by scaling M2.
    const MatrixXd proj = u * u.transpose();
    const MatrixXd residual = m1 - proj * m1 * proj;
    if (residual.cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m1.cwiseAbs().maxCoeff())) return kInf;
  }

  const MatrixXd basis = u * ev.tail(rank).cwiseSqrt().cwiseInverse().asDiagonal();
  MatrixXd pencil = basis.transpose() * m1 * basis;
  pencil = 0.5 * (pencil + pencil.transpose()).eval();
  const double lam = max_eigenvalue(pencil);

  double slack = lam - 1.0;
  if (slack < 1e-12 * (1.0 + std::abs(lam))) slack = 0.0;  // M1 <= M2 up to rounding
  return slack / d;
}

}  // namespace

double eta_star(double beta_star, double lambda_w_min) {
  if (!(lambda_w_min > 0.0))
    throw BoundInapplicable("bound inapplicable: process noise has no positive eigenvalue floor");
  if (!(beta_star > 0.0) || !std::isfinite(beta_star))
    throw std::invalid_argument("peak covariance eigenvalue must be positive and finite");
  return beta_star / (beta_star + lambda_w_min);
}

double delta_T_eps(const BoundInputs& inputs) {
  check_core(inputs);
  const double eta = eta_star(inputs.beta_star, inputs.lambda_w_min);
  const double ratio = inputs.beta_star / inputs.lambda_w_min;
  return (inputs.n_y / inputs.lambda_w_min) *
         (1.0 + ratio * ratio * (1.0 - std::pow(eta, inputs.T - 1)));
}

double zeta(double L_f, double L_m, double delta, int t) {
  return std::exp(log_zeta(L_f, L_m, delta, t));
}

double bound_eps_delta(const BoundInputs& inputs, double v_star) {
  check_core(inputs);
  if (!(inputs.epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  check_rates(inputs.L_f, inputs.L_m, inputs.delta);
  if (!(v_star >= inputs.logdet_W))
    throw std::invalid_argument(
        "optimal cost below log det of the process noise; inputs are inconsistent");

  // delta = 0 collapses every zeta to 1 and the formula to the plain
  // epsilon-sensitivity. Taking that branch keeps the two reports identical.
  if (inputs.delta == 0.0) return inputs.epsilon * delta_T_eps(inputs);

  const double eta = eta_star(inputs.beta_star, inputs.lambda_w_min);
  const double log_eta = std::log(eta);
  const int t_end = inputs.T;

  std::vector<double> lz(static_cast<std::size_t>(t_end) + 1, 0.0);
  {
    double acc = 0.0, geom = 0.0, power = 1.0;
    lz[1] = 0.0;
    for (int tau = 1; tau <= t_end - 1; ++tau) {
      power *= inputs.L_f;
      geom += power;
      acc += std::log1p(inputs.L_m * inputs.delta * geom);
      lz[static_cast<std::size_t>(tau) + 1] = acc;
    }
  }
  const double log_z_final = lz[static_cast<std::size_t>(t_end)];

  // Ratios zeta_T / zeta_tau stay in log space until the last moment; a
  // genuinely astronomical ratio saturates to +inf, which is an honest
  // (if useless) bound.
  double weighted = 0.0;
  for (int tau = 1; tau <= t_end - 1; ++tau)
    weighted += std::exp(log_z_final - lz[static_cast<std::size_t>(tau)] +
                         (t_end - tau) * log_eta);

  const double big_delta =
      (inputs.n_y / inputs.lambda_w_min) *
      (1.0 + (inputs.beta_star / inputs.lambda_w_min) * weighted);
  return std::expm1(log_z_final) * (v_star - inputs.logdet_W) + inputs.epsilon * big_delta;
}

double peak_error(const std::vector<Covariance>& covs) {
  if (covs.empty()) throw InvalidMatrix("peak error needs at least one covariance");
  double peak = -kInf;
  for (const Covariance& c : covs) peak = std::max(peak, max_eigenvalue(c.mat()));
  return peak;
}

LipschitzEstimate estimate_lipschitz(const LinearScenario& scenario, int sample_count,
                                     std::uint64_t seed) {
  if (!scenario.sample_state)
    throw ConfigError("scenario has no state sampler; continuity constants cannot be estimated");
  if (!scenario.motion || !scenario.observe || scenario.num_controls < 1)
    throw ConfigError("scenario is incomplete");
  if (sample_count < 2) throw ConfigError("need at least two sampled states");

  std::mt19937_64 rng(seed);
  std::vector<SensorState> states;
  states.reserve(static_cast<std::size_t>(sample_count));
  for (int i = 0; i < sample_count; ++i) states.push_back(scenario.sample_state(rng));

  // The observation map is probed at time 1; the scenario families this
  // estimator targets are time-invariant.
  std::vector<MatrixXd> infos;
  infos.reserve(states.size());
  for (const SensorState& x : states) infos.push_back(info_matrix(scenario.observe(1, x)));

  LipschitzEstimate est;
  est.note = "empirical lower bound: sampled pairs may miss the worst case,"
             " so a guarantee built from these constants can be optimistic";
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      const double d = metric(states[i], states[j]);
      if (d == 0.0) continue;

      for (int u = 0; u < scenario.num_controls; ++u) {
        const double df = metric(scenario.motion(states[i], u), scenario.motion(states[j], u));
        est.L_f = std::max(est.L_f, df / d);
      }

      const bool zi = infos[i].isZero(1e-14);
      const bool zj = infos[j].isZero(1e-14);
      if (zi && zj) {
        ++est.skipped_pairs;
        continue;
      }
      est.L_m = std::max(est.L_m, direction_constant(infos[i], infos[j], d));
      est.L_m = std::max(est.L_m, direction_constant(infos[j], infos[i], d));
    }
  }
  return est;
}

GapReport measure_gap(const LinearScenario& scenario, int T, double epsilon, double delta,
                      double L_f, double L_m, const SearchOptions& options) {
  GapReport report;
  const PlanResult exact = fvi(scenario, T, options);
  const PlanResult reduced = rvi(scenario, T, epsilon, delta, options);
  report.v_exact = exact.final_cost;
  report.v_reduced = reduced.final_cost;
  report.gap = report.v_reduced - report.v_exact;

  const std::vector<Covariance> tail(exact.covs.begin() + 1, exact.covs.end());
  report.beta_star = peak_error(tail);

  BoundInputs in;
  in.beta_star = report.beta_star;
  in.lambda_w_min = scenario.target.w_min_eig;
  in.n_y = static_cast<int>(scenario.target.dim());
  in.T = T;
  in.epsilon = epsilon + options.redundancy_tol;  // what the planner actually prunes with
  in.delta = delta;
  in.L_f = L_f;
  in.L_m = L_m;
  in.logdet_W = logdet(scenario.target.W);
  report.bound = bound_eps_delta(in, report.v_exact);

  report.ok = report.gap >= 0.0 && report.gap <= report.bound;
  return report;
}

}  // namespace infoplan
