#include "infoplan/gas.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace infoplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const std::shared_ptr<const StateGeometry>& gas_geometry() {
  static const std::shared_ptr<const StateGeometry> geom = [] {
    VectorXd w(3);
    w << 1.0, 1.0, 1.0;
    return StateGeometry::make({false, false, true}, w);
  }();
  return geom;
}

void validate_grid(const GasGrid& g) {
  if (g.width < 1 || g.height < 1) throw ConfigError("grid needs at least one cell per axis");
  if (!(g.cell_size > 0.0)) throw ConfigError("grid cell size must be positive");
  if (!(g.sensor_noise_var > 0.0)) throw ConfigError("sensor noise variance must be positive");
  if (!(g.beam_max_range > 0.0)) throw ConfigError("beam range must be positive");
  if (g.prior_mean.size() != g.cell_count())
    throw ConfigError("prior mean length does not match the cell count");
  if (g.prior_cov.dim() != g.cell_count())
    throw ConfigError("prior covariance dimension does not match the cell count");
  if (g.start_ix < 0 || g.start_ix >= g.width || g.start_iy < 0 || g.start_iy >= g.height)
    throw ConfigError("start cell lies outside the grid");
  if (g.start_orientation < 0 || g.start_orientation >= kGasOrientations)
    throw ConfigError("start orientation index out of range");
}

struct CellPose {
  int ix, iy, oi;
};

// Move table {hold, +x, -x, +y, -y}; a move that would leave the grid is
// cancelled entirely, so every control stays applicable from every cell.
CellPose apply_control(const GasGrid& g, int ix, int iy, int u) {
  static constexpr int kMoves[5][2] = {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  const int move = u / kGasOrientations;
  const int oi = u % kGasOrientations;
  int nx = ix + kMoves[move][0];
  int ny = iy + kMoves[move][1];
  if (nx < 0 || nx >= g.width || ny < 0 || ny >= g.height) {
    nx = ix;
    ny = iy;
  }
  return {nx, ny, oi};
}

SensorState cell_pose_state(const CellPose& p) {
  VectorXd c(3);
  c << static_cast<double>(p.ix), static_cast<double>(p.iy), GasGrid::orientations()[p.oi];
  return SensorState(c, gas_geometry());
}

// ---------------------------------------------------------------------------
// Factored information planner.
//
// With A = I, W = 0 and a diagonal prior S0, the covariance after collecting
// beam rows h_1..h_k (noise v each) is S0 - S0 Hᵀ (vI + H S0 Hᵀ)⁻¹ H S0, and
//   logdet(Sigma_k) = logdet(S0) + k ln v - logdet(vI + H S0 Hᵀ).
// Each node therefore keeps only the Cholesky factor of the small k x k gram
// matrix G = vI + H S0 Hᵀ; appending a beam h costs one sparse product
// u = H S0 hᵀ plus a triangular solve, and the cost increment is
//   ln v - ln(v + h S0 hᵀ - |L⁻¹u|²),
// the log of the marginal innovation variance ratio.
// ---------------------------------------------------------------------------

struct PoseCache {
  int n_poses = 0;
  std::vector<BeamRow> rows;    // beam lengths, sorted by cell index
  std::vector<BeamRow> scaled;  // entries multiplied by the prior variance of the cell
  std::vector<double> self;     // h S0 hᵀ
};

PoseCache build_pose_cache(const GasGrid& g) {
  PoseCache pc;
  pc.n_poses = g.cell_count() * kGasOrientations;
  pc.rows.resize(static_cast<std::size_t>(pc.n_poses));
  pc.scaled.resize(static_cast<std::size_t>(pc.n_poses));
  pc.self.assign(static_cast<std::size_t>(pc.n_poses), 0.0);
  const VectorXd diag = g.prior_cov.mat().diagonal();
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      for (int oi = 0; oi < kGasOrientations; ++oi) {
        const int p = (iy * g.width + ix) * kGasOrientations + oi;
        BeamRow row = beam_cell_lengths(g, cell_pose_state({ix, iy, oi}));
        std::sort(row.begin(), row.end());
        BeamRow scaled = row;
        double self = 0.0;
        for (std::size_t e = 0; e < row.size(); ++e) {
          scaled[e].second = row[e].second * diag(row[e].first);
          self += row[e].second * scaled[e].second;
        }
        pc.rows[static_cast<std::size_t>(p)] = std::move(row);
        pc.scaled[static_cast<std::size_t>(p)] = std::move(scaled);
        pc.self[static_cast<std::size_t>(p)] = self;
      }
    }
  }
  return pc;
}

double sparse_dot(const BeamRow& a, const BeamRow& b) {
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      ++i;
    } else if (a[i].first > b[j].first) {
      ++j;
    } else {
      acc += a[i].second * b[j].second;
      ++i;
      ++j;
    }
  }
  return acc;
}

struct SlimNode {
  int ix, iy, oi;
  int parent, control;
};

struct RichNode {
  double cost = 0.0;
  std::vector<int> beams;  // pose ids whose rows are in the factor, in order
  MatrixXd chol;           // lower-triangular factor of vI + H S0 Hᵀ
};

// Marginal innovation variance of appending pose p's beam to node r; fills
// l_out with the triangular solve needed to extend the factor.
double innovation(const PoseCache& pc, const RichNode& r, int p, double v, VectorXd& l_out) {
  const Index k = static_cast<Index>(r.beams.size());
  VectorXd u(k);
  for (Index i = 0; i < k; ++i)
    u(i) = sparse_dot(pc.rows[static_cast<std::size_t>(r.beams[static_cast<std::size_t>(i)])],
                      pc.scaled[static_cast<std::size_t>(p)]);
  l_out = r.chol.triangularView<Eigen::Lower>().solve(u);
  return v + pc.self[static_cast<std::size_t>(p)] - l_out.squaredNorm();
}

RichNode extend(const PoseCache& pc, const RichNode& r, int p, double v, int level) {
  RichNode child;
  child.beams = r.beams;
  if (pc.rows[static_cast<std::size_t>(p)].empty()) {
    child.cost = r.cost;
    child.chol = r.chol;
    return child;
  }
  VectorXd l;
  const double s = innovation(pc, r, p, v, l);
  if (!(s > 0.0))
    throw PlannerAbort("belief factor lost positive definiteness at level " +
                       std::to_string(level));
  const Index k = r.chol.rows();
  child.chol = MatrixXd::Zero(k + 1, k + 1);
  child.chol.topLeftCorner(k, k) = r.chol;
  child.chol.block(k, 0, 1, k) = l.transpose();
  child.chol(k, k) = std::sqrt(s);
  child.beams.push_back(p);
  child.cost = r.cost + std::log(v) - std::log(s);
  return child;
}

double candidate_cost(const PoseCache& pc, const RichNode& r, int p, double v, int level) {
  if (pc.rows[static_cast<std::size_t>(p)].empty()) return r.cost;
  VectorXd l;
  const double s = innovation(pc, r, p, v, l);
  if (!(s > 0.0))
    throw PlannerAbort("belief factor lost positive definiteness at level " +
                       std::to_string(level));
  return r.cost + std::log(v) - std::log(s);
}

std::vector<int> backtrack_controls(const std::vector<std::vector<SlimNode>>& levels,
                                    int leaf_index) {
  std::vector<int> controls;
  int level = static_cast<int>(levels.size()) - 1;
  int idx = leaf_index;
  while (level > 0) {
    const SlimNode& n = levels[static_cast<std::size_t>(level)][static_cast<std::size_t>(idx)];
    controls.push_back(n.control);
    idx = n.parent;
    --level;
  }
  std::reverse(controls.begin(), controls.end());
  return controls;
}

RichNode root_rich(const GasGrid& g) {
  RichNode root;
  root.cost = g.prior_cov.mat().diagonal().array().log().sum();
  root.chol = MatrixXd::Zero(0, 0);
  return root;
}

SlimNode root_slim(const GasGrid& g) {
  return {g.start_ix, g.start_iy, g.start_orientation, -1, -1};
}

// Exhaustive-over-states search: every distinct (cell, orientation) at each
// level keeps exactly one node, the cheapest one in (cost, insertion) order.
// This is the epsilon = infinity, delta = 0 reduced planner specialized to
// the factored belief.
std::pair<std::vector<int>, std::vector<std::int64_t>> factored_rvi(
    const GasGrid& g, const PoseCache& pc, int T, const SearchOptions& options) {
  const double v = g.sensor_noise_var;
  std::vector<std::vector<SlimNode>> levels(static_cast<std::size_t>(T) + 1);
  levels[0].push_back(root_slim(g));
  std::vector<RichNode> frontier{root_rich(g)};
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(T) + 1, 1);

  struct Cand {
    double cost;
    int parent, control;
    int pose;
  };
  std::vector<Cand> cands;
  std::vector<int> seen(static_cast<std::size_t>(pc.n_poses), -1);

  for (int t = 1; t <= T; ++t) {
    const auto n_cand =
        static_cast<std::int64_t>(frontier.size()) * kGasControls;
    if (n_cand > options.node_cap)
      throw PlannerAbort("node cap of " + std::to_string(options.node_cap) +
                         " exceeded at level " + std::to_string(t) + " (" +
                         std::to_string(n_cand) + " candidates)");

    cands.clear();
    for (std::size_t pi = 0; pi < frontier.size(); ++pi) {
      const SlimNode& slim = levels[static_cast<std::size_t>(t - 1)][pi];
      // Clamped moves can alias controls to the same child pose; evaluating
      // once per distinct pose (keeping the lowest control id) yields the
      // same retention outcome as enumerating all 60.
      int pose_of_control[kGasControls];
      for (int u = 0; u < kGasControls; ++u) {
        const CellPose cp = apply_control(g, slim.ix, slim.iy, u);
        pose_of_control[u] = (cp.iy * g.width + cp.ix) * kGasOrientations + cp.oi;
        bool duplicate = false;
        for (int w = 0; w < u; ++w)
          if (pose_of_control[w] == pose_of_control[u]) {
            duplicate = true;
            break;
          }
        if (duplicate) continue;
        cands.push_back({candidate_cost(pc, frontier[pi], pose_of_control[u], v, t),
                         static_cast<int>(pi), u, pose_of_control[u]});
      }
    }

    std::vector<int> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (cands[static_cast<std::size_t>(a)].cost != cands[static_cast<std::size_t>(b)].cost)
        return cands[static_cast<std::size_t>(a)].cost < cands[static_cast<std::size_t>(b)].cost;
      const auto ia = static_cast<std::int64_t>(cands[static_cast<std::size_t>(a)].parent) *
                          kGasControls + cands[static_cast<std::size_t>(a)].control;
      const auto ib = static_cast<std::int64_t>(cands[static_cast<std::size_t>(b)].parent) *
                          kGasControls + cands[static_cast<std::size_t>(b)].control;
      return ia < ib;
    });

    std::vector<RichNode> next_frontier;
    for (int ci : order) {
      const Cand& c = cands[static_cast<std::size_t>(ci)];
      if (seen[static_cast<std::size_t>(c.pose)] == t) continue;  // a cheaper twin is retained
      seen[static_cast<std::size_t>(c.pose)] = t;
      const CellPose cp{c.pose / kGasOrientations % g.width,
                        c.pose / kGasOrientations / g.width, c.pose % kGasOrientations};
      levels[static_cast<std::size_t>(t)].push_back({cp.ix, cp.iy, cp.oi, c.parent, c.control});
      next_frontier.push_back(
          extend(pc, frontier[static_cast<std::size_t>(c.parent)], c.pose, v, t));
    }
    frontier = std::move(next_frontier);
    sizes[static_cast<std::size_t>(t)] = static_cast<std::int64_t>(frontier.size());
  }

  // Retention preserved (cost, insertion) order, so the first leaf is best.
  return {backtrack_controls(levels, 0), sizes};
}

std::pair<std::vector<int>, std::vector<std::int64_t>> factored_greedy(
    const GasGrid& g, const PoseCache& pc, int T) {
  const double v = g.sensor_noise_var;
  RichNode cur = root_rich(g);
  SlimNode pose = root_slim(g);
  std::vector<int> controls;
  for (int t = 1; t <= T; ++t) {
    int best_u = -1, best_pose = -1;
    double best_cost = kInf;
    for (int u = 0; u < kGasControls; ++u) {
      const CellPose cp = apply_control(g, pose.ix, pose.iy, u);
      const int p = (cp.iy * g.width + cp.ix) * kGasOrientations + cp.oi;
      const double cost = candidate_cost(pc, cur, p, v, t);
      if (cost < best_cost) {  // strict: ties keep the lowest control id
        best_cost = cost;
        best_u = u;
        best_pose = p;
      }
    }
    cur = extend(pc, cur, best_pose, v, t);
    const CellPose cp = apply_control(g, pose.ix, pose.iy, best_u);
    pose = {cp.ix, cp.iy, cp.oi, 0, best_u};
    controls.push_back(best_u);
  }
  return {controls, std::vector<std::int64_t>(static_cast<std::size_t>(T) + 1, 1)};
}

VectorXd sample_field(const GasGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  VectorXd z(g.cell_count());
  for (Index i = 0; i < z.size(); ++i) z(i) = n01(rng);
  if (g.prior_cov.mat().isDiagonal(0.0))
    return g.prior_mean + g.prior_cov.mat().diagonal().cwiseSqrt().cwiseProduct(z);
  Eigen::LLT<MatrixXd> llt(g.prior_cov.mat());
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("prior covariance is not positive definite");
  return g.prior_mean + llt.matrixL() * z;
}

}  // namespace

const std::array<double, kGasOrientations>& GasGrid::orientations() {
  static const std::array<double, kGasOrientations> table = [] {
    std::array<double, kGasOrientations> t{};
    for (int k = 0; k < kGasOrientations; ++k) t[static_cast<std::size_t>(k)] = -M_PI + k * (M_PI / 6.0);
    return t;
  }();
  return table;
}

GasGrid GasGrid::make(int width, int height, double cell_size, double prior_var,
                      double prior_mean_ppm, double noise_var, double beam_max_range) {
  GasGrid g;
  g.width = width;
  g.height = height;
  g.cell_size = cell_size;
  if (width < 1 || height < 1) throw ConfigError("grid needs at least one cell per axis");
  if (!(prior_var > 0.0)) throw ConfigError("prior variance must be positive");
  const int n = width * height;
  g.prior_mean = VectorXd::Constant(n, prior_mean_ppm);
  g.prior_cov = Covariance::validated(prior_var * MatrixXd::Identity(n, n));
  g.sensor_noise_var = noise_var;
  g.beam_max_range = beam_max_range;
  g.start_ix = width / 2;
  g.start_iy = height / 2;
  g.start_orientation = 0;
  validate_grid(g);
  return g;
}

BeamRow beam_cell_lengths(const GasGrid& grid, const SensorState& pose) {
  if (pose.dim() != 3) throw InvalidState("gas sensor pose needs (x, y, theta)");
  const double c = grid.cell_size;
  const double px = (pose.coord(0) + 0.5) * c;
  const double py = (pose.coord(1) + 0.5) * c;
  const double dx = std::cos(pose.coord(2));
  const double dy = std::sin(pose.coord(2));

  // Clip the ray parameter range [0, max_range] against the grid box.
  double t0 = 0.0;
  double t1 = grid.beam_max_range;
  const auto clip = [&](double p, double d, double hi) {
    if (std::abs(d) < 1e-15) {
      if (p < 0.0 || p > hi) t1 = -1.0;
      return;
    }
    double a = (0.0 - p) / d;
    double b = (hi - p) / d;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  };
  clip(px, dx, grid.width * c);
  clip(py, dy, grid.height * c);

  BeamRow row;
  if (!(t1 - t0 > 1e-12)) return row;

  // Entry cell, sampled just past the entry point so boundary hits land in
  // the cell the ray is actually about to cross.
  const auto cell_at = [&](double p, double d, int n) {
    const int i = static_cast<int>(std::floor((p + d * (t0 + 1e-12)) / c));
    return std::min(std::max(i, 0), n - 1);
  };
  int ix = cell_at(px, dx, grid.width);
  int iy = cell_at(py, dy, grid.height);

  const int step_x = dx > 0.0 ? 1 : -1;
  const int step_y = dy > 0.0 ? 1 : -1;
  const double tdx = std::abs(dx) < 1e-15 ? kInf : c / std::abs(dx);
  const double tdy = std::abs(dy) < 1e-15 ? kInf : c / std::abs(dy);
  const auto next_boundary = [&](int i, double p, double d, int step) {
    if (std::abs(d) < 1e-15) return kInf;
    return ((i + (step > 0 ? 1 : 0)) * c - p) / d;
  };
  double tx = next_boundary(ix, px, dx, step_x);
  double ty = next_boundary(iy, py, dy, step_y);

  double t_cur = t0;
  while (t1 - t_cur > 1e-12) {
    const double t_next = std::min({tx, ty, t1});
    const double len = t_next - t_cur;
    if (len > 1e-12) row.emplace_back(grid.cell_index(ix, iy), len);
    if (t_next >= t1) break;
    // A shared crossing time is a corner: step both axes at once so the
    // zero-length graze cells never appear.
    if (tx <= t_next) {
      ix += step_x;
      tx += tdx;
    }
    if (ty <= t_next) {
      iy += step_y;
      ty += tdy;
    }
    if (ix < 0 || ix >= grid.width || iy < 0 || iy >= grid.height) break;
    t_cur = t_next;
  }
  return row;
}

SensorState gasbot_step(const GasGrid& grid, const SensorState& x, int u) {
  if (u < 0 || u >= kGasControls)
    throw ConfigError("gas control id out of range: " + std::to_string(u));
  if (x.dim() != 3) throw InvalidState("gas sensor pose needs (x, y, theta)");
  const int ix = static_cast<int>(std::llround(x.coord(0)));
  const int iy = static_cast<int>(std::llround(x.coord(1)));
  return cell_pose_state(apply_control(grid, ix, iy, u));
}

SensorState gas_start_state(const GasGrid& grid) {
  return cell_pose_state({grid.start_ix, grid.start_iy, grid.start_orientation});
}

LinearObservation gas_observation(const GasGrid& grid, const SensorState& pose) {
  MatrixXd h = MatrixXd::Zero(1, grid.cell_count());
  for (const auto& [cell, len] : beam_cell_lengths(grid, pose)) h(0, cell) = len;
  MatrixXd v(1, 1);
  v << grid.sensor_noise_var;
  return LinearObservation::make(std::move(h), std::move(v));
}

LinearScenario make_gas_scenario(const GasGrid& grid) {
  validate_grid(grid);
  auto shared = std::make_shared<const GasGrid>(grid);
  LinearScenario sc;
  sc.num_controls = kGasControls;
  sc.motion = [shared](const SensorState& x, int u) { return gasbot_step(*shared, x, u); };
  sc.observe = [shared](int, const SensorState& pose) { return gas_observation(*shared, pose); };
  sc.x0 = gas_start_state(grid);
  sc.sigma0 = grid.prior_cov;
  const int n = grid.cell_count();
  sc.target = LinearTargetModel::make(MatrixXd::Identity(n, n), MatrixXd::Zero(n, n));
  sc.sample_state = [shared](std::mt19937_64& rng) {
    const int ix = static_cast<int>(rng() % static_cast<std::uint64_t>(shared->width));
    const int iy = static_cast<int>(rng() % static_cast<std::uint64_t>(shared->height));
    const int oi = static_cast<int>(rng() % kGasOrientations);
    return cell_pose_state({ix, iy, oi});
  };
  return sc;
}

GasExperiment run_gas_experiment(const GasGrid& grid, int T, GasPlanner planner,
                                 std::uint64_t field_seed, const SearchOptions& options) {
  validate_grid(grid);
  if (T < 1) throw ConfigError("planning horizon must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  const LinearScenario scenario = make_gas_scenario(grid);
  const bool diagonal_prior = grid.prior_cov.mat().isDiagonal(0.0);

  GasExperiment out;
  if (planner == GasPlanner::Fvi) {
    out.plan = fvi(scenario, T, options);
  } else if (!diagonal_prior) {
    out.plan = planner == GasPlanner::Greedy ? greedy(scenario, T, options)
                                             : rvi(scenario, T, kInf, 0.0, options);
  } else {
    const PoseCache pc = build_pose_cache(grid);
    auto [controls, sizes] = planner == GasPlanner::Greedy
                                 ? factored_greedy(grid, pc, T)
                                 : factored_rvi(grid, pc, T, options);
    out.plan = replay(scenario, controls);
    out.plan.tree_sizes = std::move(sizes);
  }
  out.plan.wall_time = seconds_since(start);
  out.field = sample_field(grid, field_seed);
  return out;
}

}  // namespace infoplan
