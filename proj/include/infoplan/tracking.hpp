#pragma once
// Target tracking with a differential-drive sensor: unicycle kinematics over
// a fixed set of motion primitives, a double-integrator target, range-bearing
// measurements whose noise grows with distance, obstructions, and sensor
// speed, and the receding-horizon loop that replans from the current
// estimate, executes one control, and folds the next measurement into an
// extended Kalman filter. A paired-seed Monte-Carlo driver compares planner
// configurations on identical noise realizations.

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "infoplan/common.hpp"
#include "infoplan/kalman.hpp"
#include "infoplan/search.hpp"

namespace infoplan {

// Disc obstacle; range measurements whose sensor-target segment crosses one
// get noisier.
struct TreeDisc {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.3;
};

// Sensor pose. Heading stays wrapped to [-pi, pi).
struct DiffDriveState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// Target state (position, velocity) in world coordinates.
using TargetState = Eigen::Vector4d;

struct TrackingWorld {
  double tau = 0.5;  // sampling period, seconds
  double q = 0.2;    // diffusion strength of the target's velocity noise
  std::vector<TreeDisc> trees;
  double max_range = 15.0;  // measurements beyond this range never arrive
  // Range noise sigma_r = a0 + a1 * r * (1 + a2 * k), where k counts the
  // trees crossed by the sensor-target segment.
  double a0 = 0.1;
  double a1 = 0.05;
  double a2 = 1.0;
  // Bearing noise sigma_alpha = b0 + b1 * speed.
  double b0 = 0.02;
  double b1 = 0.05;
  // Arena rectangle; confines tree placement. The vehicle itself is free.
  double xmin = -20.0, xmax = 20.0, ymin = -20.0, ymax = 20.0;
  // Episode setup: where the sensor starts and what the estimator believes
  // about the target initially. The true target is drawn from this prior.
  DiffDriveState sensor_start{};
  TargetState target_start_mean = TargetState(7.0, 3.0, -0.3, 0.2);
  Covariance prior =
      Covariance::assume_psd(Eigen::Vector4d(4.0, 4.0, 0.25, 0.25).asDiagonal());
};

// The 20 motion primitives: speeds {0,1,2,3} m/s crossed with turn rates
// {0, +pi/2, -pi/2, +pi, -pi} rad/s; id = speed_index * 5 + rate_index.
inline constexpr int kDrivePrimitives = 20;

// (v, omega) of primitive u. Throws ConfigError for ids outside [0, 20).
std::pair<double, double> drive_primitive(int u);

// Constant-(v, omega) arc over tau seconds, using the exact closed form and
// switching to its second-order expansion when |tau*omega| < 1e-3, where the
// closed form divides by a vanishing omega.
DiffDriveState diffdrive_step(const DiffDriveState& x, double v, double omega, double tau);

// Double-integrator transition matrix and its discretized process noise.
Eigen::Matrix4d target_transition(double tau);
Eigen::Matrix4d target_noise(double tau, double q);

// One step of target motion: transition plus a Gaussian draw (skipped when
// the noise covariance is exactly zero, i.e. q == 0 or tau == 0).
TargetState target_step(const TargetState& y, const TrackingWorld& world, std::mt19937_64& rng);

// Distance and world-frame angle of the target position as seen from the
// sensor. Throws InvalidState when the two coincide.
std::pair<double, double> range_bearing(const DiffDriveState& x, const TargetState& y);

// Jacobian of (range, bearing) with respect to the target state, evaluated
// at target position y_hat: 2x4 with zero velocity columns; rows are
// orthogonal with norms 1 and 1/r. Throws InvalidState at zero range.
MatrixXd linearize_obs(const DiffDriveState& x, const Eigen::Vector2d& y_hat);

// Number of tree discs the segment a-b touches or crosses.
int trees_on_segment(const TrackingWorld& world, const Eigen::Vector2d& a,
                     const Eigen::Vector2d& b);

// Measurement noise for a sensor that moved x_prev -> x and observes y, or
// nullopt when the target is farther than max_range. Diagonal 2x2: range
// noise grows with distance and tree crossings, bearing noise with the
// sensor speed |x - x_prev| / tau.
std::optional<MatrixXd> noise_cov(const DiffDriveState& x, const DiffDriveState& x_prev,
                                  const TargetState& y, const TrackingWorld& world);

enum class TrackingPlanner { Rvi, Greedy };

struct TrackingPlannerConfig {
  TrackingPlanner kind = TrackingPlanner::Rvi;
  int horizon = 7;       // lookahead steps per replanning cycle
  double epsilon = 0.1;  // pruning tolerances of the reduced search
  double delta = 1.0;
  SearchOptions options{};
  // Testing hook: linearize the filter and evaluate its noise model at the
  // true target instead of the predicted mean. Lets consistency checks run
  // the filter against the exact model that generated the measurements.
  bool oracle_filter = false;
};

// Planning problem for one replanning cycle. Plan states are (x, y, heading,
// speed); the speed coordinate feeds the bearing noise. Observations are
// linearized along the open-loop mean prediction of the target, and
// predicted positions beyond max_range plan as zero-information
// observations. mean/cov are the current posterior; the scenario's prior is
// its one-step prediction, the covariance in force when the first planned
// measurement arrives.
LinearScenario tracking_scenario(const TrackingWorld& world, const DiffDriveState& sensor,
                                 double speed, const TargetState& mean, const Covariance& cov,
                                 int horizon);

struct TrackStep {
  TargetState truth;
  TargetState estimate_mean;
  Covariance estimate_cov;  // posterior after this step's measurement
  DiffDriveState sensor;
  std::optional<Eigen::Vector2d> measurement;  // (range, bearing), if in range
  double planned_cost = 0.0;  // final cost of the plan chosen at this step
};

struct TrackResult {
  std::vector<TrackStep> steps;    // length T_max
  std::vector<double> pos_error;   // |estimate - truth| position norm per step
  std::vector<double> vel_error;   // same for the velocity components
  std::vector<double> logdet_cov;  // log det of the posterior per step
  bool lost = false;               // measurements stayed absent to the end
};

// One closed-loop episode: plan from the current estimate, execute the first
// control, advance the true target, simulate the measurement, update the
// filter. Deterministic given the seeds; the single-seed overload derives
// the process and measurement streams from one value. A planner abort is
// rethrown with the step index prepended.
TrackResult mpc_run(const TrackingWorld& world, const TrackingPlannerConfig& config, int T_max,
                    std::uint64_t seed);
TrackResult mpc_run(const TrackingWorld& world, const TrackingPlannerConfig& config, int T_max,
                    std::uint64_t process_seed, std::uint64_t measurement_seed);

struct TrackingSummary {
  double mean_pos_rmse = 0.0;  // mean over steps of the across-run RMSE
  double mean_vel_rmse = 0.0;
  std::vector<double> mean_logdet;  // across-run mean of log det, per step
  double mean_final_logdet = 0.0;
  double lost_fraction = 0.0;
};

// Paired evaluation: run i uses the same per-run seeds for every config, so
// configs face identical target paths and noise streams. Runs execute in
// parallel when workers > 1; results do not depend on the worker count.
std::vector<TrackingSummary> monte_carlo(const TrackingWorld& world,
                                         const std::vector<TrackingPlannerConfig>& configs,
                                         int T_max, int runs, std::uint64_t base_seed,
                                         int workers = 1);

// World with Poisson-disc tree placement: candidate centers are drawn from
// the seed and kept when at least min_separation from every accepted tree
// and clear of both start positions.
TrackingWorld make_tracking_world(std::uint64_t tree_seed, int tree_count = 12,
                                  double tree_radius = 0.3, double min_separation = 2.5);

}  // namespace infoplan
