#include "infoplan/kalman.hpp"

#include <cmath>
#include <sstream>

namespace infoplan {

namespace {

MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

double min_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

bool is_symmetric(const MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_psd(const MatrixXd& m, double tol_scale) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo >= -tol_scale * (1.0 + std::abs(hi));
}

bool loewner_leq(const MatrixXd& a, const MatrixXd& b, double tol) {
  return min_eigenvalue(b - a) >= -tol;
}

Covariance Covariance::validated(MatrixXd m) {
  if (m.rows() != m.cols()) throw InvalidMatrix("covariance must be square");
  if (!is_symmetric(m)) throw InvalidMatrix("covariance must be symmetric");
  MatrixXd s = symmetrized(m);
  if (!is_psd(s)) throw InvalidMatrix("covariance must be positive semidefinite");
  return Covariance(std::move(s));
}

Covariance Covariance::assume_psd(MatrixXd m) { return Covariance(symmetrized(m)); }

LinearTargetModel LinearTargetModel::make(MatrixXd A, MatrixXd W) {
  if (A.rows() != A.cols()) throw InvalidMatrix("A must be square");
  if (W.rows() != A.rows() || W.cols() != A.cols())
    throw InvalidMatrix("W must match the shape of A");
  if (!is_symmetric(W)) throw InvalidMatrix("W must be symmetric");
  MatrixXd Ws = symmetrized(W);
  const double lo = min_eigenvalue(Ws);
  if (lo < -kPsdTolScale * (1.0 + Ws.cwiseAbs().maxCoeff()))
    throw InvalidMatrix("W must be positive semidefinite");
  LinearTargetModel out;
  out.A = std::move(A);
  out.W = std::move(Ws);
  out.w_min_eig = std::max(lo, 0.0);
  return out;
}

LinearObservation LinearObservation::make(MatrixXd H, MatrixXd V) {
  if (V.rows() != V.cols()) throw InvalidMatrix("V must be square");
  if (V.rows() != H.rows()) throw InvalidMatrix("V must have one row per measurement");
  if (!is_symmetric(V)) throw InvalidMatrix("V must be symmetric");
  if (H.rows() > 0 && min_eigenvalue(V) <= 0.0)
    throw InvalidMatrix("V must be positive definite");
  LinearObservation out;
  out.H = std::move(H);
  out.V = symmetrized(V);
  return out;
}

LinearObservation LinearObservation::absent(Index ny) {
  LinearObservation out;
  out.H = MatrixXd(0, ny);
  out.V = MatrixXd(0, 0);
  return out;
}

MatrixXd info_matrix(const LinearObservation& obs) {
  if (obs.absent()) return MatrixXd::Zero(obs.ny(), obs.ny());
  Eigen::LLT<MatrixXd> llt(obs.V);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("V is numerically singular in info_matrix");
  // H^T V^-1 H via the Cholesky solve keeps the result symmetric up to
  // round-off; symmetrize to make it exact.
  MatrixXd vinv_h = llt.solve(obs.H);
  return symmetrized(obs.H.transpose() * vinv_h);
}

Covariance riccati_update(const Covariance& sigma, const MatrixXd& m) {
  const Index n = sigma.dim();
  if (m.rows() != n || m.cols() != n)
    throw InvalidMatrix("information matrix shape mismatch in riccati_update");
  // (I + Sigma M) is invertible for PSD Sigma and M: the eigenvalues of
  // Sigma M are real and nonnegative.
  MatrixXd lhs = MatrixXd::Identity(n, n) + sigma.mat() * m;
  MatrixXd out = lhs.partialPivLu().solve(sigma.mat());
  return Covariance::assume_psd(std::move(out));
}

Covariance riccati_predict(const Covariance& sigma, const LinearTargetModel& model) {
  if (model.dim() != sigma.dim())
    throw InvalidMatrix("model dimension mismatch in riccati_predict");
  MatrixXd out = model.A * sigma.mat() * model.A.transpose() + model.W;
  return Covariance::assume_psd(std::move(out));
}

Covariance riccati_step(const Covariance& sigma, const LinearObservation& obs,
                        const LinearTargetModel& model) {
  if (obs.ny() != sigma.dim())
    throw InvalidMatrix("observation dimension mismatch in riccati_step");
  if (obs.absent()) return riccati_predict(sigma, model);
  return riccati_predict(riccati_update(sigma, info_matrix(obs)), model);
}

Covariance t_step_map(const std::vector<LinearObservation>& path, const Covariance& sigma0,
                      const LinearTargetModel& model, int t) {
  if (t < 0 || static_cast<size_t>(t) > path.size())
    throw InvalidMatrix("t out of range in t_step_map");
  Covariance sigma = sigma0;
  for (int tau = 0; tau < t; ++tau) sigma = riccati_step(sigma, path[tau], model);
  return sigma;
}

MatrixXd directional_derivative(const std::vector<LinearObservation>& path,
                                const Covariance& sigma0, const MatrixXd& q,
                                const LinearTargetModel& model, int t) {
  if (t < 0 || static_cast<size_t>(t) > path.size())
    throw InvalidMatrix("t out of range in directional_derivative");
  const Index n = sigma0.dim();
  if (q.rows() != n || q.cols() != n || !is_symmetric(q, 1e-9))
    throw InvalidMatrix("q must be symmetric with matching shape");

  // Chain rule through t steps. The update entering step tau sees the
  // covariance phi produced by the previous tau-1 steps, so its local
  // linearization is Q -> C Q C^T with C = (I + phi M_tau)^-1 evaluated at
  // that incoming phi; prediction contributes A ... A^T. Accumulate the
  // left factors into P, then the derivative is P q P^T.
  MatrixXd P = MatrixXd::Identity(n, n);
  Covariance phi = sigma0;
  for (int tau = 0; tau < t; ++tau) {
    const MatrixXd m = info_matrix(path[tau]);
    MatrixXd lhs = MatrixXd::Identity(n, n) + phi.mat() * m;
    MatrixXd c = lhs.partialPivLu().inverse();
    P = (model.A * c * P).eval();
    phi = riccati_step(phi, path[tau], model);
  }
  return symmetrized(P * q * P.transpose());
}

double logdet(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidMatrix("logdet needs a square matrix");
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("logdet: matrix is not positive definite");
  double acc = 0.0;
  const auto& L = llt.matrixLLT();
  for (Index i = 0; i < m.rows(); ++i) {
    const double d = L(i, i);
    if (!(d > 0.0) || !std::isfinite(d))
      throw NotPositiveDefinite("logdet: nonpositive Cholesky pivot");
    acc += std::log(d);
  }
  return 2.0 * acc;
}

double logdet(const Covariance& sigma) { return logdet(sigma.mat()); }

}  // namespace infoplan
