#pragma once
// Gas-concentration mapping on a uniform grid. The sensor carries a beam
// detector that integrates concentration along a ray, so one observation is
// a single linear functional of the whole field: z = sum_i l_i * y_i + v,
// with l_i the length the beam travels inside cell i. The field is static
// (A = I, W = 0), which makes the mapping run a pure information-gathering
// problem and disables the noise-floor suboptimality bounds.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "infoplan/common.hpp"
#include "infoplan/kalman.hpp"
#include "infoplan/search.hpp"

namespace infoplan {

// Beam orientations are fixed to twelve 30-degree steps covering the circle.
inline constexpr int kGasOrientations = 12;
// Five position moves (hold, +x, -x, +y, -y) times twelve orientations.
inline constexpr int kGasControls = 60;

struct GasGrid {
  int width = 20;   // cells along x
  int height = 20;  // cells along y
  double cell_size = 1.0;  // meters per cell edge

  // Cell (ix, iy) lives at flat index iy * width + ix; positions in sensor
  // states are cell coordinates, with (ix, iy) meaning the center of that
  // cell, i.e. meters ((ix + 0.5) * cell_size, (iy + 0.5) * cell_size).
  VectorXd prior_mean;  // ppm per cell
  Covariance prior_cov; // ppm^2; diagonal priors unlock the fast planner
  double sensor_noise_var = 1.0;  // scalar measurement noise variance
  double beam_max_range = 10.0;   // meters; the ray is also cut at the walls

  int start_ix = 0, start_iy = 0;
  int start_orientation = 0;  // index into orientations()

  int cell_count() const { return width * height; }
  int cell_index(int ix, int iy) const { return iy * width + ix; }

  // The twelve allowed beam angles, -pi to +5pi/6 in pi/6 steps. Every
  // sensor state stores one of these exact values, so state keys built from
  // them match bitwise.
  static const std::array<double, kGasOrientations>& orientations();

  // Uniform grid with an independent per-cell prior. Throws ConfigError on
  // nonpositive dimensions or variances.
  static GasGrid make(int width, int height, double cell_size = 1.0,
                      double prior_var = 400.0, double prior_mean_ppm = 100.0,
                      double noise_var = 1.0, double beam_max_range = 10.0);
};

// One traversed cell: (flat cell index, length in meters). Rows list cells
// in traversal order along the beam and carry only positive lengths.
using BeamRow = std::vector<std::pair<int, double>>;

// Cells crossed by the beam cast from `pose` (cell coordinates + angle),
// truncated at beam_max_range and at the grid boundary. A beam that never
// enters the grid yields an empty row.
BeamRow beam_cell_lengths(const GasGrid& grid, const SensorState& pose);

// Applies one of the 60 controls: u = move * 12 + orientation, with moves
// ordered {hold, +x, -x, +y, -y}. The move shifts the position by one cell
// (clamped at the walls: a blocked move holds position) and the orientation
// is SET to the chosen angle, not incremented. Throws ConfigError for an
// out-of-range control id.
SensorState gasbot_step(const GasGrid& grid, const SensorState& x, int u);

SensorState gas_start_state(const GasGrid& grid);

// Observation for a pose: H is the 1 x n_y row of beam lengths (zero row for
// an empty beam), V the scalar noise variance.
LinearObservation gas_observation(const GasGrid& grid, const SensorState& pose);

// Generic-planner view of the grid problem. Suits fvi/greedy/rvi directly,
// but every node then carries a dense n_y x n_y covariance; use
// run_gas_experiment for production-size grids.
LinearScenario make_gas_scenario(const GasGrid& grid);

enum class GasPlanner { Greedy, Rvi, Fvi };

struct GasExperiment {
  PlanResult plan;
  VectorXd field;  // one ground-truth field draw, for visualization only
};

// Plans a T-step trajectory and samples one field realization. Planning
// never touches the field: the covariance recursion is measurement-free, so
// the plan depends only on the grid and the planner choice.
//
// Greedy and Rvi (always epsilon = infinity, delta = 0 here) run on a
// factored information form when the prior is diagonal: each node keeps a
// Cholesky factor of the small beam-gram matrix instead of a dense
// covariance, and costs update in O(path length^2). Non-diagonal priors and
// Fvi fall back to the generic planners. Reported states, covariances, and
// costs always come from a dense replay of the chosen controls, so numbers
// are directly comparable across planners.
GasExperiment run_gas_experiment(const GasGrid& grid, int T, GasPlanner planner,
                                 std::uint64_t field_seed = 0,
                                 const SearchOptions& options = {});

}  // namespace infoplan
