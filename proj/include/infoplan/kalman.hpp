#pragma once
// Covariance dynamics of a linear-Gaussian estimator: measurement update,
// prediction, multi-step composition, and the directional derivative of the
// composed map. Pure matrix arithmetic; no sampling, no mean propagation.

#include <vector>

#include <Eigen/Dense>

#include "infoplan/common.hpp"

namespace infoplan {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Relative tolerances used by the validation helpers below.
inline constexpr double kPsdTolScale = 1e-9;
inline constexpr double kSymmetryRelTol = 1e-10;

double min_eigenvalue(const MatrixXd& m);
double max_eigenvalue(const MatrixXd& m);
bool is_symmetric(const MatrixXd& m, double rel_tol = kSymmetryRelTol);
// min-eig(m) >= -tol_scale * (1 + max-eig(m))
bool is_psd(const MatrixXd& m, double tol_scale = kPsdTolScale);
// a <= b in the Loewner order, up to tol on the smallest eigenvalue of b - a.
bool loewner_leq(const MatrixXd& a, const MatrixXd& b, double tol);

// Symmetric positive semidefinite matrix. Construction either validates the
// invariants or, for matrices produced by operations that preserve PSD-ness,
// merely symmetrizes to wash out round-off.
class Covariance {
 public:
  Covariance() = default;

  // Checks symmetry (relative 1e-10) and PSD-ness; throws InvalidMatrix.
  static Covariance validated(MatrixXd m);
  // Symmetrizes 0.5*(m + m^T) without the eigenvalue check.
  static Covariance assume_psd(MatrixXd m);

  Index dim() const { return m_.rows(); }
  const MatrixXd& mat() const { return m_; }

 private:
  explicit Covariance(MatrixXd m) : m_(std::move(m)) {}
  MatrixXd m_;
};

// Target dynamics y+ = A y + w with w ~ N(0, W). W may be singular or zero;
// its smallest eigenvalue is cached because error bounds depend on it.
struct LinearTargetModel {
  MatrixXd A;
  MatrixXd W;
  double w_min_eig = 0.0;

  // Validates shapes and W symmetry/PSD-ness; throws InvalidMatrix.
  static LinearTargetModel make(MatrixXd A, MatrixXd W);
  Index dim() const { return A.rows(); }
};

// Linearized measurement z = H y + v with v ~ N(0, V), or an absent
// measurement (out of sensing range) carrying no information. Absent
// observations are encoded as H with zero rows.
struct LinearObservation {
  MatrixXd H;
  MatrixXd V;

  // Validates shapes and that V is symmetric positive definite.
  static LinearObservation make(MatrixXd H, MatrixXd V);
  static LinearObservation absent(Index ny);
  bool absent() const { return H.rows() == 0; }
  Index ny() const { return H.cols(); }
};

// Sensor information matrix M = H^T V^-1 H (zero for absent observations).
// Throws NotPositiveDefinite when V is numerically singular.
MatrixXd info_matrix(const LinearObservation& obs);

// Measurement step (Sigma^-1 + M)^-1, computed in the gain form
// (I + Sigma M)^-1 Sigma which stays valid for singular Sigma.
Covariance riccati_update(const Covariance& sigma, const MatrixXd& m);

// Prediction step A Sigma A^T + W.
Covariance riccati_predict(const Covariance& sigma, const LinearTargetModel& model);

// One full step: predict(update(sigma, info_matrix(obs))).
Covariance riccati_step(const Covariance& sigma, const LinearObservation& obs,
                        const LinearTargetModel& model);

// t-step composition along a fixed observation path; path[0] is applied
// first. t == 0 returns sigma0. Requires 0 <= t <= path.size().
Covariance t_step_map(const std::vector<LinearObservation>& path, const Covariance& sigma0,
                      const LinearTargetModel& model, int t);

// Directional derivative of the t-step map at sigma0 in the direction q:
//   d/de t_step_map(sigma0 + e q) at e = 0.
// Computed as P q P^T where P is the product over steps of A (I + phi M)^-1
// with phi the covariance entering each step. q must be symmetric.
MatrixXd directional_derivative(const std::vector<LinearObservation>& path,
                                const Covariance& sigma0, const MatrixXd& q,
                                const LinearTargetModel& model, int t);

// log det via Cholesky. Throws NotPositiveDefinite for singular or indefinite
// input; callers that want an infinite cost must handle that explicitly.
double logdet(const MatrixXd& m);
double logdet(const Covariance& sigma);

}  // namespace infoplan
