#include "infoplan/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "infoplan/parallel.hpp"
#include "infoplan/redundancy.hpp"

namespace infoplan {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
// Quantization step for exact-match (delta == 0) state keys.
constexpr double kExactKeyQuantum = 1e-9;

double wrap_angle(double a) {
  double v = std::remainder(a, kTwoPi);
  if (v >= M_PI) v -= kTwoPi;  // remainder may return +pi exactly
  return v;
}

using detail::parallel_for;

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void validate_scenario(const LinearScenario& sc, int T) {
  if (T < 1) throw ConfigError("planning horizon must be at least 1");
  if (sc.num_controls < 1) throw ConfigError("scenario has an empty control set");
  if (!sc.motion || !sc.observe) throw ConfigError("scenario callbacks are unset");
  if (sc.sigma0.dim() != sc.target.dim())
    throw ConfigError("prior covariance dimension does not match the target model");
}

// Child node: apply the control, observe at the reached state, run one
// Riccati step, and price the result. Everything downstream (sorting,
// pruning, replay) sees exactly these values.
SearchNode make_child(const LinearScenario& sc, const SearchNode& parent, int parent_index,
                      int control, int t) {
  SearchNode child;
  child.state = sc.motion(parent.state, control);
  LinearObservation obs = sc.observe(t, child.state);
  child.cov = riccati_step(parent.cov, obs, sc.target);
  child.cost = logdet(child.cov);
  child.parent = parent_index;
  child.control = control;
  child.level = t;
  return child;
}

SearchNode root_node(const LinearScenario& sc) {
  SearchNode root;
  root.state = sc.x0;
  root.cov = sc.sigma0;
  root.cost = 0.0;  // never compared against level >= 1 costs
  return root;
}

// Expand every (retained node, control) pair of one level in parallel.
std::vector<SearchNode> expand_level(const LinearScenario& sc,
                                     const std::vector<SearchNode>& prev, int t,
                                     const SearchOptions& options) {
  const int u = sc.num_controls;
  const int n = static_cast<int>(prev.size()) * u;
  std::vector<SearchNode> out(n);
  try {
    parallel_for(n, options.workers, [&](int i) {
      out[i] = make_child(sc, prev[i / u], i / u, i % u, t);
    });
  } catch (const NotPositiveDefinite& e) {
    throw PlannerAbort("covariance lost positive definiteness at level " + std::to_string(t) +
                       ": " + e.what());
  }
  return out;
}

// Walk parent links from the best leaf back to the root and assemble the
// result arrays (controls, states, covs) in forward order.
PlanResult backtrack(const std::vector<std::vector<SearchNode>>& levels, int best_leaf) {
  const int T = static_cast<int>(levels.size()) - 1;
  PlanResult r;
  r.controls.resize(T);
  r.states.resize(T + 1);
  r.covs.resize(T + 1);
  r.tree_sizes.resize(T + 1);
  int at = best_leaf;
  for (int t = T; t >= 1; --t) {
    const SearchNode& node = levels[t][at];
    r.controls[t - 1] = node.control;
    r.states[t] = node.state;
    r.covs[t] = node.cov;
    at = node.parent;
  }
  r.states[0] = levels[0][0].state;
  r.covs[0] = levels[0][0].cov;
  r.final_cost = levels[T][best_leaf].cost;
  for (int t = 0; t <= T; ++t) r.tree_sizes[t] = static_cast<std::int64_t>(levels[t].size());
  return r;
}

int min_cost_index(const std::vector<SearchNode>& nodes) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(nodes.size()); ++i)
    if (nodes[i].cost < nodes[best].cost) best = i;
  return best;
}

}  // namespace

std::shared_ptr<const StateGeometry> StateGeometry::euclidean(Index dim) {
  auto g = std::make_shared<StateGeometry>();
  g->angular.assign(static_cast<std::size_t>(dim), false);
  g->weights = VectorXd::Ones(dim);
  return g;
}

std::shared_ptr<const StateGeometry> StateGeometry::make(std::vector<bool> angular,
                                                         VectorXd weights) {
  if (static_cast<Index>(angular.size()) != weights.size())
    throw InvalidState("state geometry mask and weights disagree in length");
  if ((weights.array() <= 0.0).any())
    throw InvalidState("state metric weights must be positive");
  auto g = std::make_shared<StateGeometry>();
  g->angular = std::move(angular);
  g->weights = std::move(weights);
  return g;
}

SensorState::SensorState(VectorXd coords, std::shared_ptr<const StateGeometry> geometry)
    : coords_(std::move(coords)), geometry_(std::move(geometry)) {
  if (!geometry_) throw InvalidState("sensor state needs a geometry");
  if (static_cast<Index>(geometry_->angular.size()) != coords_.size())
    throw InvalidState("sensor state dimension does not match its geometry");
  for (Index i = 0; i < coords_.size(); ++i)
    if (geometry_->angular[static_cast<std::size_t>(i)]) coords_(i) = wrap_angle(coords_(i));
}

SensorState SensorState::euclidean(VectorXd coords) {
  auto g = StateGeometry::euclidean(coords.size());
  return SensorState(std::move(coords), std::move(g));
}

double metric(const SensorState& a, const SensorState& b) {
  if (a.dim() != b.dim()) throw InvalidState("sensor state dimension mismatch");
  if (a.dim() == 0) return 0.0;
  const StateGeometry& ga = *a.geometry();
  const StateGeometry& gb = *b.geometry();
  if (ga.angular != gb.angular || ga.weights != gb.weights)
    throw InvalidState("sensor state geometry mismatch");
  double sum = 0.0;
  for (Index i = 0; i < a.dim(); ++i) {
    double d = a.coord(i) - b.coord(i);
    if (ga.angular[static_cast<std::size_t>(i)]) d = std::remainder(d, kTwoPi);
    sum += ga.weights(i) * d * d;
  }
  return std::sqrt(sum);
}

std::size_t SpatialIndex::KeyHash::operator()(const Key& k) const {
  std::size_t h = 1469598103934665603ull;
  for (std::int64_t v : k) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

SpatialIndex::SpatialIndex(double delta) : delta_(delta) {
  if (!(delta >= 0.0)) throw ConfigError("neighbor radius must be nonnegative");
}

SpatialIndex::Key SpatialIndex::key_of(const SensorState& x) const {
  const StateGeometry& g = *x.geometry();
  Key key(static_cast<std::size_t>(x.dim()));
  for (Index i = 0; i < x.dim(); ++i) {
    if (delta_ == 0.0) {
      key[static_cast<std::size_t>(i)] = std::llround(x.coord(i) / kExactKeyQuantum);
      continue;
    }
    const double w = std::sqrt(g.weights(i));
    if (g.angular[static_cast<std::size_t>(i)]) {
      const double circumference = kTwoPi * w;
      const auto buckets = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::floor(circumference / delta_)));
      const double edge = circumference / static_cast<double>(buckets);
      const double p = (x.coord(i) + M_PI) * w;  // position along [0, circumference)
      auto idx = static_cast<std::int64_t>(std::floor(p / edge));
      idx = std::clamp<std::int64_t>(idx, 0, buckets - 1);
      key[static_cast<std::size_t>(i)] = idx;
    } else {
      key[static_cast<std::size_t>(i)] =
          static_cast<std::int64_t>(std::floor(x.coord(i) * w / delta_));
    }
  }
  return key;
}

std::vector<std::vector<std::int64_t>> SpatialIndex::probe_axes(const SensorState& x) const {
  const StateGeometry& g = *x.geometry();
  const Key center = key_of(x);
  std::vector<std::vector<std::int64_t>> axes(center.size());
  for (std::size_t i = 0; i < center.size(); ++i) {
    if (delta_ == 0.0) {
      axes[i] = {center[i]};
      continue;
    }
    if (g.angular[i]) {
      const double w = std::sqrt(g.weights(static_cast<Index>(i)));
      const auto buckets = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::floor(kTwoPi * w / delta_)));
      for (std::int64_t off = -1; off <= 1; ++off) {
        const std::int64_t candidate = ((center[i] + off) % buckets + buckets) % buckets;
        if (std::find(axes[i].begin(), axes[i].end(), candidate) == axes[i].end())
          axes[i].push_back(candidate);
      }
    } else {
      axes[i] = {center[i] - 1, center[i], center[i] + 1};
    }
  }
  return axes;
}

void SpatialIndex::add(const SensorState& x, const Covariance& cov) {
  const int id = static_cast<int>(entries_.size());
  buckets_[key_of(x)].push_back(id);
  entries_.push_back(Entry{x, cov});
}

std::vector<int> SpatialIndex::neighbor_ids(const SensorState& x) const {
  std::vector<int> out;
  if (entries_.empty()) return out;
  if (delta_ == 0.0) {
    auto it = buckets_.find(key_of(x));
    if (it != buckets_.end()) out = it->second;  // quantized-key equality IS the match
    return out;
  }
  const auto axes = probe_axes(x);
  Key probe(axes.size());
  std::vector<std::size_t> odo(axes.size(), 0);
  while (true) {
    for (std::size_t i = 0; i < axes.size(); ++i) probe[i] = axes[i][odo[i]];
    auto it = buckets_.find(probe);
    if (it != buckets_.end()) {
      for (int id : it->second)
        if (metric(entries_[static_cast<std::size_t>(id)].state, x) <= delta_)
          out.push_back(id);
    }
    std::size_t axis = 0;
    while (axis < axes.size() && ++odo[axis] == axes[axis].size()) {
      odo[axis] = 0;
      ++axis;
    }
    if (axis == axes.size()) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Covariance> delta_neighbors(const SpatialIndex& index, const SensorState& x,
                                        double delta) {
  if (delta != index.delta())
    throw ConfigError("neighbor query radius differs from the index build radius");
  std::vector<Covariance> out;
  for (int id : index.neighbor_ids(x)) out.push_back(index.cov(id));
  return out;
}

PlanResult fvi(const LinearScenario& scenario, int T, const SearchOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  validate_scenario(scenario, T);

  // Refuse instances whose full tree cannot fit the budget; the level sizes
  // are |controls|^t, so the total is computed incrementally with an
  // overflow-safe running product.
  std::int64_t level_size = 1;
  std::int64_t total = 0;
  for (int t = 1; t <= T; ++t) {
    if (level_size > options.exhaustive_budget / scenario.num_controls) {
      throw PlannerAbort("exhaustive search needs more than " +
                         std::to_string(options.exhaustive_budget) +
                         " nodes for horizon " + std::to_string(T));
    }
    level_size *= scenario.num_controls;
    total += level_size;
    if (total > options.exhaustive_budget) {
      throw PlannerAbort("exhaustive search needs " + std::to_string(total) +
                         "+ nodes, over the budget of " +
                         std::to_string(options.exhaustive_budget));
    }
  }

  std::vector<std::vector<SearchNode>> levels(static_cast<std::size_t>(T) + 1);
  levels[0] = {root_node(scenario)};
  for (int t = 1; t <= T; ++t) levels[t] = expand_level(scenario, levels[t - 1], t, options);

  PlanResult r = backtrack(levels, min_cost_index(levels[T]));
  r.wall_time = seconds_since(start);
  return r;
}

PlanResult greedy(const LinearScenario& scenario, int T, const SearchOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  validate_scenario(scenario, T);
  (void)options;

  PlanResult r;
  r.states.push_back(scenario.x0);
  r.covs.push_back(scenario.sigma0);
  r.tree_sizes.assign(static_cast<std::size_t>(T) + 1, 1);

  SearchNode cur = root_node(scenario);
  for (int t = 1; t <= T; ++t) {
    SearchNode best;
    bool have = false;
    for (int u = 0; u < scenario.num_controls; ++u) {
      SearchNode child;
      try {
        child = make_child(scenario, cur, 0, u, t);
      } catch (const NotPositiveDefinite& e) {
        throw PlannerAbort("covariance lost positive definiteness at level " +
                           std::to_string(t) + ": " + e.what());
      }
      if (!have || child.cost < best.cost) {  // ties keep the lowest control
        best = std::move(child);
        have = true;
      }
    }
    r.controls.push_back(best.control);
    r.states.push_back(best.state);
    r.covs.push_back(best.cov);
    cur = std::move(best);
  }
  r.final_cost = cur.cost;
  r.wall_time = seconds_since(start);
  return r;
}

PlanResult rvi(const LinearScenario& scenario, int T, double epsilon, double delta,
               const SearchOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  validate_scenario(scenario, T);
  if (!(epsilon >= 0.0)) throw ConfigError("redundancy slack epsilon must be nonnegative");
  if (!(delta >= 0.0)) throw ConfigError("crossing radius delta must be nonnegative");
  const bool eps_infinite = std::isinf(epsilon);

  std::vector<std::vector<SearchNode>> levels(static_cast<std::size_t>(T) + 1);
  levels[0] = {root_node(scenario)};

  for (int t = 1; t <= T; ++t) {
    const auto n_cand =
        static_cast<std::int64_t>(levels[t - 1].size()) * scenario.num_controls;
    if (n_cand > options.node_cap) {
      throw PlannerAbort("node cap of " + std::to_string(options.node_cap) +
                         " exceeded at level " + std::to_string(t) + " (" +
                         std::to_string(n_cand) + " candidates)");
    }
    std::vector<SearchNode> cand = expand_level(scenario, levels[t - 1], t, options);

    // Ascending by cost; equal costs keep expansion order so results do not
    // depend on the sort implementation or the worker count.
    std::vector<int> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (cand[a].cost != cand[b].cost) return cand[a].cost < cand[b].cost;
      return a < b;
    });

    // The cheapest node survives unconditionally; every other node survives
    // only if it is not epsilon-redundant against the already-retained
    // covariances within distance delta.
    std::vector<SearchNode> retained;
    SpatialIndex index(delta);
    for (int oi : order) {
      SearchNode& node = cand[oi];
      bool keep = true;
      if (!retained.empty()) {
        std::vector<int> ids = index.neighbor_ids(node.state);
        if (!ids.empty()) {
          if (eps_infinite) {
            keep = false;  // any retained neighbor dominates
          } else {
            RedundancyQuery q;
            q.candidate = node.cov;
            q.reference_set.reserve(ids.size());
            for (int id : ids) q.reference_set.push_back(index.cov(id));
            q.epsilon = epsilon;
            q.tol = options.redundancy_tol;
            keep = !is_eps_redundant(q);
          }
        }
      }
      if (keep) {
        index.add(node.state, node.cov);
        retained.push_back(std::move(node));
      }
    }
    levels[t] = std::move(retained);
  }

  // Retention preserves the cost-sorted order, so the first leaf is minimal.
  PlanResult r = backtrack(levels, 0);
  r.wall_time = seconds_since(start);
  return r;
}

PlanResult replay(const LinearScenario& scenario, const std::vector<int>& controls) {
  const auto start = std::chrono::steady_clock::now();
  const int T = static_cast<int>(controls.size());
  validate_scenario(scenario, std::max(T, 1));

  PlanResult r;
  r.controls = controls;
  r.states.push_back(scenario.x0);
  r.covs.push_back(scenario.sigma0);
  r.tree_sizes.assign(static_cast<std::size_t>(T) + 1, 1);

  SearchNode cur = root_node(scenario);
  for (int t = 1; t <= T; ++t) {
    const int u = controls[static_cast<std::size_t>(t - 1)];
    if (u < 0 || u >= scenario.num_controls)
      throw ConfigError("control id out of range in replayed sequence");
    cur = make_child(scenario, cur, 0, u, t);
    r.states.push_back(cur.state);
    r.covs.push_back(cur.cov);
  }
  r.final_cost = T == 0 ? logdet(scenario.sigma0) : cur.cost;
  r.wall_time = seconds_since(start);
  return r;
}

}  // namespace infoplan
