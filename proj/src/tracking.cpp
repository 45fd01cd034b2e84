#include "infoplan/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "infoplan/parallel.hpp"

namespace infoplan {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
// Predicted ranges below this cannot be linearized; the planner and the
// filter treat them as absent instead of dividing by zero.
constexpr double kMinRange = 1e-9;

double wrap_angle(double a) {
  double v = std::remainder(a, kTwoPi);
  if (v >= M_PI) v -= kTwoPi;  // remainder may return +pi exactly
  return v;
}

// splitmix64; used to derive independent stream seeds from one base value.
std::uint64_t next_seed(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double segment_speed(const DiffDriveState& to, const DiffDriveState& from, double tau) {
  return std::hypot(to.x - from.x, to.y - from.y) / tau;
}

// sigma_r and sigma_alpha of the measurement noise model, defined for every
// range. The max_range gate that decides whether a measurement arrives at
// all lives in noise_cov; the filter still needs these values when its
// linearization point strays beyond the gate even though a measurement came.
std::pair<double, double> noise_sigmas(const TrackingWorld& world, double r, int crossings,
                                       double speed) {
  return {world.a0 + world.a1 * r * (1.0 + world.a2 * crossings), world.b0 + world.b1 * speed};
}

const std::shared_ptr<const StateGeometry>& plan_geometry() {
  static const std::shared_ptr<const StateGeometry> geometry = StateGeometry::make(
      {false, false, true, false}, (VectorXd(4) << 1.0, 1.0, 0.5, 0.1).finished());
  return geometry;
}

// Plan states carry (x, y, heading, speed); the trailing speed coordinate is
// what the bearing-noise model reads during planning.
SensorState plan_state(const DiffDriveState& x, double speed) {
  VectorXd c(4);
  c << x.x, x.y, x.theta, speed;
  return SensorState(std::move(c), plan_geometry());
}

DiffDriveState pose_of(const SensorState& s) { return {s.coord(0), s.coord(1), s.coord(2)}; }

Eigen::Vector4d draw_normal4(std::mt19937_64& rng) {
  std::normal_distribution<double> unit;
  Eigen::Vector4d z;
  for (int i = 0; i < 4; ++i) z(i) = unit(rng);
  return z;
}

void validate_world(const TrackingWorld& world) {
  if (!(world.tau > 0.0) || !std::isfinite(world.tau))
    throw ConfigError("sampling period must be positive");
  if (!(world.q >= 0.0) || !std::isfinite(world.q))
    throw ConfigError("diffusion strength must be nonnegative");
  if (!(world.max_range > 0.0)) throw ConfigError("sensing range must be positive");
  if (world.prior.dim() != 4) throw ConfigError("target prior must be 4x4");
  if (!world.target_start_mean.allFinite())
    throw ConfigError("target start mean must be finite");
}

}  // namespace

std::pair<double, double> drive_primitive(int u) {
  static constexpr double kSpeeds[4] = {0.0, 1.0, 2.0, 3.0};
  static constexpr double kRates[5] = {0.0, M_PI / 2.0, -M_PI / 2.0, M_PI, -M_PI};
  if (u < 0 || u >= kDrivePrimitives)
    throw ConfigError("drive primitive id " + std::to_string(u) + " out of range");
  return {kSpeeds[u / 5], kRates[u % 5]};
}

DiffDriveState diffdrive_step(const DiffDriveState& x, double v, double omega, double tau) {
  const double a = tau * omega;
  DiffDriveState out = x;
  if (std::abs(a) < 1e-3) {
    out.x += v * tau * (std::cos(x.theta) - 0.5 * a * std::sin(x.theta));
    out.y += v * tau * (std::sin(x.theta) + 0.5 * a * std::cos(x.theta));
  } else {
    out.x += v / omega * (std::sin(x.theta + a) - std::sin(x.theta));
    out.y += v / omega * (std::cos(x.theta) - std::cos(x.theta + a));
  }
  out.theta = wrap_angle(x.theta + a);
  return out;
}

Eigen::Matrix4d target_transition(double tau) {
  Eigen::Matrix4d a = Eigen::Matrix4d::Identity();
  a(0, 2) = tau;
  a(1, 3) = tau;
  return a;
}

Eigen::Matrix4d target_noise(double tau, double q) {
  Eigen::Matrix4d w = Eigen::Matrix4d::Zero();
  const Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
  w.topLeftCorner<2, 2>() = q * tau * tau * tau / 3.0 * eye;
  w.topRightCorner<2, 2>() = q * tau * tau / 2.0 * eye;
  w.bottomLeftCorner<2, 2>() = q * tau * tau / 2.0 * eye;
  w.bottomRightCorner<2, 2>() = q * tau * eye;
  return w;
}

TargetState target_step(const TargetState& y, const TrackingWorld& world, std::mt19937_64& rng) {
  TargetState out = target_transition(world.tau) * y;
  const Eigen::Matrix4d w = target_noise(world.tau, world.q);
  if (w.trace() > 0.0) {
    Eigen::LLT<Eigen::Matrix4d> llt(w);
    if (llt.info() != Eigen::Success)
      throw NotPositiveDefinite("target process noise is not positive definite");
    out += llt.matrixL() * draw_normal4(rng);
  }
  return out;
}

std::pair<double, double> range_bearing(const DiffDriveState& x, const TargetState& y) {
  const double dx = y(0) - x.x;
  const double dy = y(1) - x.y;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) throw InvalidState("range-bearing observation undefined at zero range");
  return {r, std::atan2(dy, dx)};
}

MatrixXd linearize_obs(const DiffDriveState& x, const Eigen::Vector2d& y_hat) {
  const double dx = y_hat(0) - x.x;
  const double dy = y_hat(1) - x.y;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) throw InvalidState("cannot linearize the observation at zero range");
  const double alpha = std::atan2(dy, dx);
  MatrixXd h = MatrixXd::Zero(2, 4);
  h(0, 0) = dx / r;
  h(0, 1) = dy / r;
  h(1, 0) = -std::sin(alpha) / r;
  h(1, 1) = std::cos(alpha) / r;
  return h;
}

int trees_on_segment(const TrackingWorld& world, const Eigen::Vector2d& a,
                     const Eigen::Vector2d& b) {
  int crossings = 0;
  const Eigen::Vector2d d = b - a;
  const double len2 = d.squaredNorm();
  for (const TreeDisc& tree : world.trees) {
    const Eigen::Vector2d c(tree.x, tree.y);
    const double t = len2 > 0.0 ? std::clamp((c - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    if ((a + t * d - c).norm() <= tree.radius) ++crossings;
  }
  return crossings;
}

std::optional<MatrixXd> noise_cov(const DiffDriveState& x, const DiffDriveState& x_prev,
                                  const TargetState& y, const TrackingWorld& world) {
  const auto [r, alpha] = range_bearing(x, y);
  (void)alpha;
  if (r > world.max_range) return std::nullopt;
  const double speed = segment_speed(x, x_prev, world.tau);
  const int crossings = trees_on_segment(world, Eigen::Vector2d(x.x, x.y), y.head<2>());
  const auto [sigma_r, sigma_a] = noise_sigmas(world, r, crossings, speed);
  MatrixXd v = MatrixXd::Zero(2, 2);
  v(0, 0) = sigma_r * sigma_r;
  v(1, 1) = sigma_a * sigma_a;
  return v;
}

LinearScenario tracking_scenario(const TrackingWorld& world, const DiffDriveState& sensor,
                                 double speed, const TargetState& mean, const Covariance& cov,
                                 int horizon) {
  validate_world(world);
  if (horizon < 1) throw ConfigError("planning horizon must be at least 1");
  if (cov.dim() != 4) throw ConfigError("target estimate covariance must be 4x4");

  // Open-loop mean prediction: the target the planner expects to see at
  // lookahead t is A^t times the current mean.
  auto means = std::make_shared<std::vector<TargetState>>();
  means->reserve(static_cast<std::size_t>(horizon) + 1);
  means->push_back(mean);
  const Eigen::Matrix4d a = target_transition(world.tau);
  for (int t = 1; t <= horizon; ++t) means->push_back(a * means->back());

  auto w = std::make_shared<const TrackingWorld>(world);

  LinearScenario sc;
  sc.x0 = plan_state(sensor, speed);
  sc.num_controls = kDrivePrimitives;
  sc.target = LinearTargetModel::make(a, target_noise(world.tau, world.q));
  // The planner applies measurement updates before predictions, so its prior
  // must be the covariance in force when the first planned measurement
  // arrives: one prediction ahead of the current posterior.
  sc.sigma0 = riccati_predict(cov, sc.target);
  sc.motion = [w](const SensorState& s, int u) {
    const auto [v, omega] = drive_primitive(u);
    const DiffDriveState from = pose_of(s);
    const DiffDriveState to = diffdrive_step(from, v, omega, w->tau);
    return plan_state(to, segment_speed(to, from, w->tau));
  };
  sc.observe = [w, means](int t, const SensorState& s) {
    if (t < 1 || t >= static_cast<int>(means->size()))
      throw InvalidState("observation time outside the planned horizon");
    const DiffDriveState pose = pose_of(s);
    const Eigen::Vector2d target_pos = (*means)[static_cast<std::size_t>(t)].head<2>();
    const double r = std::hypot(target_pos(0) - pose.x, target_pos(1) - pose.y);
    if (r > w->max_range || r < kMinRange) return LinearObservation::absent(4);
    const int crossings = trees_on_segment(*w, Eigen::Vector2d(pose.x, pose.y), target_pos);
    const auto [sigma_r, sigma_a] = noise_sigmas(*w, r, crossings, s.coord(3));
    MatrixXd v = MatrixXd::Zero(2, 2);
    v(0, 0) = sigma_r * sigma_r;
    v(1, 1) = sigma_a * sigma_a;
    return LinearObservation::make(linearize_obs(pose, target_pos), v);
  };
  return sc;
}

TrackResult mpc_run(const TrackingWorld& world, const TrackingPlannerConfig& config, int T_max,
                    std::uint64_t seed) {
  std::uint64_t s = seed;
  const std::uint64_t process_seed = next_seed(s);
  const std::uint64_t measurement_seed = next_seed(s);
  return mpc_run(world, config, T_max, process_seed, measurement_seed);
}

TrackResult mpc_run(const TrackingWorld& world, const TrackingPlannerConfig& config, int T_max,
                    std::uint64_t process_seed, std::uint64_t measurement_seed) {
  validate_world(world);
  if (T_max < 1) throw ConfigError("episode length must be at least 1");
  if (config.horizon < 1) throw ConfigError("planning horizon must be at least 1");
  if (config.horizon > T_max) throw ConfigError("planning horizon exceeds the episode length");

  std::mt19937_64 process_rng(process_seed);
  std::mt19937_64 measurement_rng(measurement_seed);

  Eigen::LLT<Eigen::Matrix4d> prior_llt((Eigen::Matrix4d(world.prior.mat())));
  if (prior_llt.info() != Eigen::Success)
    throw NotPositiveDefinite("tracking prior must be positive definite");

  const LinearTargetModel model =
      LinearTargetModel::make(target_transition(world.tau), target_noise(world.tau, world.q));

  TargetState truth = world.target_start_mean + prior_llt.matrixL() * draw_normal4(process_rng);
  TargetState mean = world.target_start_mean;
  Covariance cov = world.prior;
  DiffDriveState pose = world.sensor_start;
  DiffDriveState prev = pose;

  TrackResult out;
  out.steps.reserve(static_cast<std::size_t>(T_max));
  out.pos_error.reserve(static_cast<std::size_t>(T_max));
  out.vel_error.reserve(static_cast<std::size_t>(T_max));
  out.logdet_cov.reserve(static_cast<std::size_t>(T_max));
  int trailing_absent = 0;

  for (int t = 0; t < T_max; ++t) {
    const LinearScenario sc =
        tracking_scenario(world, pose, segment_speed(pose, prev, world.tau), mean, cov,
                          config.horizon);
    PlanResult plan;
    try {
      plan = config.kind == TrackingPlanner::Rvi
                 ? rvi(sc, config.horizon, config.epsilon, config.delta, config.options)
                 : greedy(sc, config.horizon, config.options);
    } catch (const PlannerAbort& e) {
      throw PlannerAbort("mpc step " + std::to_string(t) + ": " + e.what());
    }

    // Execute only the first planned control, then let the world move.
    const auto [v, omega] = drive_primitive(plan.controls.front());
    prev = pose;
    pose = diffdrive_step(pose, v, omega, world.tau);
    truth = target_step(truth, world, process_rng);

    // The noise draw happens every step, measurement or not, so paired runs
    // consume the stream identically regardless of the sensor's path.
    std::normal_distribution<double> unit;
    const double noise_r = unit(measurement_rng);
    const double noise_a = unit(measurement_rng);
    std::optional<Eigen::Vector2d> z;
    if (const auto v_true = noise_cov(pose, prev, truth, world)) {
      const auto [r_true, a_true] = range_bearing(pose, truth);
      z = Eigen::Vector2d(r_true + std::sqrt((*v_true)(0, 0)) * noise_r,
                          wrap_angle(a_true + std::sqrt((*v_true)(1, 1)) * noise_a));
    }

    // Filter predict.
    const TargetState mean_pred = model.A * mean;
    const Covariance cov_pred = riccati_predict(cov, model);
    mean = mean_pred;
    cov = cov_pred;
    if (z) {
      const Eigen::Vector2d lin_pos =
          config.oracle_filter ? Eigen::Vector2d(truth.head<2>())
                               : Eigen::Vector2d(mean_pred.head<2>());
      const double r_hat = std::hypot(lin_pos(0) - pose.x, lin_pos(1) - pose.y);
      if (r_hat >= kMinRange) {
        const MatrixXd h = linearize_obs(pose, lin_pos);
        const int crossings =
            trees_on_segment(world, Eigen::Vector2d(pose.x, pose.y), lin_pos);
        const auto [sigma_r, sigma_a] =
            noise_sigmas(world, r_hat, crossings, segment_speed(pose, prev, world.tau));
        MatrixXd v_filter = MatrixXd::Zero(2, 2);
        v_filter(0, 0) = sigma_r * sigma_r;
        v_filter(1, 1) = sigma_a * sigma_a;

        // Covariance through the same update map the planner uses, so the
        // planned and filtered covariances agree exactly along an executed
        // path; the measurement values touch only the mean.
        const LinearObservation obs = LinearObservation::make(h, v_filter);
        cov = riccati_update(cov_pred, info_matrix(obs));

        const auto [r_pred, a_pred] = range_bearing(pose, mean_pred);
        Eigen::Vector2d innovation((*z)(0) - r_pred, wrap_angle((*z)(1) - a_pred));
        const MatrixXd s_mat = h * cov_pred.mat() * h.transpose() + v_filter;
        const MatrixXd gain = s_mat.llt().solve(h * cov_pred.mat()).transpose();
        mean = mean_pred + gain * innovation;
      }
    }

    trailing_absent = z ? 0 : trailing_absent + 1;
    out.steps.push_back({truth, mean, cov, pose, z, plan.final_cost});
    out.pos_error.push_back((mean - truth).head<2>().norm());
    out.vel_error.push_back((mean - truth).tail<2>().norm());
    out.logdet_cov.push_back(logdet(cov));
  }

  out.lost = trailing_absent >= std::min(10, T_max);
  return out;
}

std::vector<TrackingSummary> monte_carlo(const TrackingWorld& world,
                                         const std::vector<TrackingPlannerConfig>& configs,
                                         int T_max, int runs, std::uint64_t base_seed,
                                         int workers) {
  if (configs.empty()) throw ConfigError("no planner configurations given");
  if (runs < 1) throw ConfigError("need at least one run");

  // Per-run seed pairs are derived once, before the config loop, so every
  // config faces the same target paths and noise streams.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> seeds;
  seeds.reserve(static_cast<std::size_t>(runs));
  std::uint64_t s = base_seed;
  for (int i = 0; i < runs; ++i) {
    const std::uint64_t a = next_seed(s);
    const std::uint64_t b = next_seed(s);
    seeds.emplace_back(a, b);
  }

  std::vector<TrackingSummary> out;
  out.reserve(configs.size());
  for (const TrackingPlannerConfig& config : configs) {
    std::vector<TrackResult> results(static_cast<std::size_t>(runs));
    detail::parallel_for(runs, workers, [&](int i) {
      results[static_cast<std::size_t>(i)] =
          mpc_run(world, config, T_max, seeds[static_cast<std::size_t>(i)].first,
                  seeds[static_cast<std::size_t>(i)].second);
    });

    TrackingSummary summary;
    summary.mean_logdet.assign(static_cast<std::size_t>(T_max), 0.0);
    for (int t = 0; t < T_max; ++t) {
      double pos_sq = 0.0, vel_sq = 0.0, ld = 0.0;
      for (const TrackResult& r : results) {
        const std::size_t ti = static_cast<std::size_t>(t);
        pos_sq += r.pos_error[ti] * r.pos_error[ti];
        vel_sq += r.vel_error[ti] * r.vel_error[ti];
        ld += r.logdet_cov[ti];
      }
      summary.mean_pos_rmse += std::sqrt(pos_sq / runs);
      summary.mean_vel_rmse += std::sqrt(vel_sq / runs);
      summary.mean_logdet[static_cast<std::size_t>(t)] = ld / runs;
    }
    summary.mean_pos_rmse /= T_max;
    summary.mean_vel_rmse /= T_max;
    for (const TrackResult& r : results) {
      summary.mean_final_logdet += r.logdet_cov.back();
      if (r.lost) summary.lost_fraction += 1.0;
    }
    summary.mean_final_logdet /= runs;
    summary.lost_fraction /= runs;
    out.push_back(std::move(summary));
  }
  return out;
}

TrackingWorld make_tracking_world(std::uint64_t tree_seed, int tree_count, double tree_radius,
                                  double min_separation) {
  if (tree_count < 0) throw ConfigError("tree count must be nonnegative");
  if (tree_radius <= 0.0) throw ConfigError("tree radius must be positive");

  TrackingWorld world;
  std::mt19937_64 rng(tree_seed);
  std::uniform_real_distribution<double> ux(world.xmin + tree_radius, world.xmax - tree_radius);
  std::uniform_real_distribution<double> uy(world.ymin + tree_radius, world.ymax - tree_radius);
  const Eigen::Vector2d sensor(world.sensor_start.x, world.sensor_start.y);
  const Eigen::Vector2d target(world.target_start_mean(0), world.target_start_mean(1));

  const int max_attempts = 10000 * std::max(1, tree_count);
  int attempts = 0;
  while (static_cast<int>(world.trees.size()) < tree_count && attempts++ < max_attempts) {
    const double x = ux(rng);
    const double y = uy(rng);
    const Eigen::Vector2d c(x, y);
    // Keep the start positions clear so episodes never begin inside a tree.
    if ((c - sensor).norm() < tree_radius + 1.0) continue;
    if ((c - target).norm() < tree_radius + 1.0) continue;
    bool clear = true;
    for (const TreeDisc& other : world.trees) {
      if ((c - Eigen::Vector2d(other.x, other.y)).norm() < min_separation) {
        clear = false;
        break;
      }
    }
    if (clear) world.trees.push_back({x, y, tree_radius});
  }
  if (static_cast<int>(world.trees.size()) < tree_count)
    throw ConfigError("could not place the requested number of trees");
  return world;
}

}  // namespace infoplan
