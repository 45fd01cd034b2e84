#pragma once
// Trajectory planners over (sensor state, covariance) trees: exhaustive
// forward search, one-step greedy, and reduced search that prunes nodes whose
// covariance is epsilon-redundant against retained neighbors within metric
// distance delta. All three operate on a scenario described by callbacks, so
// the same planners serve random test instances and the simulation worlds.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <unordered_map>
#include <vector>

#include "infoplan/common.hpp"
#include "infoplan/kalman.hpp"

namespace infoplan {

// Which coordinates of the sensor state wrap at +-pi, and the per-coordinate
// weights of the distance metric. Shared by every state of one scenario.
struct StateGeometry {
  std::vector<bool> angular;  // true: period-2pi coordinate
  VectorXd weights;           // positive metric weights

  static std::shared_ptr<const StateGeometry> euclidean(Index dim);
  static std::shared_ptr<const StateGeometry> make(std::vector<bool> angular, VectorXd weights);
};

// Point in the sensor configuration space. Angular coordinates are stored
// normalized to [-pi, pi).
class SensorState {
 public:
  SensorState() = default;
  SensorState(VectorXd coords, std::shared_ptr<const StateGeometry> geometry);

  // Plain R^n point: unit weights, no angular coordinates.
  static SensorState euclidean(VectorXd coords);

  const VectorXd& coords() const { return coords_; }
  double coord(Index i) const { return coords_(i); }
  const std::shared_ptr<const StateGeometry>& geometry() const { return geometry_; }
  Index dim() const { return coords_.size(); }

 private:
  VectorXd coords_;
  std::shared_ptr<const StateGeometry> geometry_;
};

// Weighted Euclidean distance; angular coordinates contribute their shortest
// wrapped difference. Throws InvalidState on dimension mismatch.
double metric(const SensorState& a, const SensorState& b);

// Uniform-grid neighbor lookup over the states added so far, answering
// "which stored entries lie within distance delta". delta == 0 degenerates
// to exact-state matching on coordinates quantized to 1e-9, so bitwise-equal
// grid states collide without any distance computation. For delta > 0 the
// bucket edge is at least delta in every (weight-scaled) coordinate, so
// scanning the 3^dim adjacent buckets is exhaustive.
class SpatialIndex {
 public:
  explicit SpatialIndex(double delta);

  void add(const SensorState& x, const Covariance& cov);
  // Ids (in insertion order, ascending) of entries within delta of x.
  std::vector<int> neighbor_ids(const SensorState& x) const;
  const Covariance& cov(int id) const { return entries_[id].cov; }
  int size() const { return static_cast<int>(entries_.size()); }
  double delta() const { return delta_; }

 private:
  struct Entry {
    SensorState state;
    Covariance cov;
  };
  using Key = std::vector<std::int64_t>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  Key key_of(const SensorState& x) const;
  // Per-coordinate bucket candidates around x (the +-1 probe offsets,
  // wrapped for angular coordinates).
  std::vector<std::vector<std::int64_t>> probe_axes(const SensorState& x) const;

  double delta_;
  std::vector<Entry> entries_;
  std::unordered_map<Key, std::vector<int>, KeyHash> buckets_;
};

// Covariances of all retained entries within distance delta of x, in
// insertion (retention) order. delta must equal the index's build delta.
std::vector<Covariance> delta_neighbors(const SpatialIndex& index, const SensorState& x,
                                        double delta);

// A planning problem: finitely many controls, sensor kinematics, target
// dynamics, and a (possibly time-indexed) linearized observation model.
// Control ids are 0..num_controls-1; the scenario owns their meaning.
struct LinearScenario {
  std::function<SensorState(const SensorState&, int control)> motion;
  int num_controls = 0;
  LinearTargetModel target;
  // Observation collected at the state reached at time t (t = 1..T).
  std::function<LinearObservation(int t, const SensorState&)> observe;
  SensorState x0;
  Covariance sigma0;
  // Optional: draws a sensor state from the region the scenario cares about.
  // Only consulted by tooling that probes the model (Lipschitz estimation);
  // the planners never call it.
  std::function<SensorState(std::mt19937_64&)> sample_state;
};

// Node of the search tree at level = time index t.
struct SearchNode {
  SensorState state;
  Covariance cov;
  double cost = 0.0;  // log det of cov
  int parent = -1;    // index into the previous level, -1 for the root
  int control = -1;   // control taken to reach this node, -1 for the root
  int level = 0;
};

struct SearchOptions {
  // Per-level cap on expanded nodes; exceeding it aborts the search.
  std::int64_t node_cap = 500000;
  // Exhaustive search refuses instances whose total tree exceeds this.
  std::int64_t exhaustive_budget = 2000000;
  int workers = 1;
  double redundancy_tol = 1e-7;
};

struct PlanResult {
  std::vector<int> controls;             // length T
  std::vector<SensorState> states;       // length T+1, states[0] = x0
  std::vector<Covariance> covs;          // length T+1, covs[0] = sigma0
  double final_cost = 0.0;               // logdet(covs[T])
  std::vector<std::int64_t> tree_sizes;  // length T+1, nodes per level
  double wall_time = 0.0;                // seconds; informational only
};

// Exhaustive forward search over all num_controls^T sequences; returns a
// cost-minimizing one (ties: lowest insertion order = lexicographic controls).
PlanResult fvi(const LinearScenario& scenario, int T, const SearchOptions& options = {});

// Stepwise minimization of the one-step posterior log det; ties broken by
// lowest control index.
PlanResult greedy(const LinearScenario& scenario, int T, const SearchOptions& options = {});

// Reduced search: each level is expanded from the retained set, sorted
// ascending by cost, the minimum retained unconditionally, and every other
// node discarded iff it is epsilon-redundant against the covariances of
// already-retained nodes within metric distance delta. epsilon may be
// infinity (retain one node per delta-neighborhood).
PlanResult rvi(const LinearScenario& scenario, int T, double epsilon, double delta,
               const SearchOptions& options = {});

// Recompute the trajectory induced by a control sequence. Applies the same
// operations in the same order as the planners, so the covariances match a
// PlanResult bit for bit.
PlanResult replay(const LinearScenario& scenario, const std::vector<int>& controls);

}  // namespace infoplan
