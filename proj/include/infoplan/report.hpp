#pragma once
// Result serialization. CSV files carry a versioned schema tag on their
// first line and print doubles with 17 significant digits, so a rerun that
// is bitwise deterministic produces byte-identical files. The JSON report is
// self-contained: it echoes the effective configuration in the accepted
// config schema, so any run can be reproduced from its own report.

#include <cstdint>
#include <string>
#include <vector>

#include "infoplan/config.hpp"

namespace infoplan {

inline constexpr const char* kInfoplanVersion = "0.1.0";
inline constexpr int kCsvSchemaVersion = 1;

// Round-trippable decimal form of a double (17 significant digits).
std::string format_full(double x);

struct TrajectoryPoint {
  int t = 0;
  std::vector<double> coords;
  double cost_to_date = 0.0;  // log det of the covariance at time t
};

// One file per planner: columns t, <coord_names...>, cost_to_date.
void write_trajectory_csv(const std::string& path, const std::vector<std::string>& coord_names,
                          const std::vector<TrajectoryPoint>& rows);

struct TreeSizeRow {
  int t = 0;
  std::string planner;
  std::int64_t nodes = 0;
};

void write_tree_sizes_csv(const std::string& path, const std::vector<TreeSizeRow>& rows);

// One verified instance/epsilon/delta combination. The CSV carries the
// comparison columns; the JSON report additionally carries the bound
// ingredients (beta_star and friends) per row.
struct BoundRow {
  int instance = 0;
  std::string family;  // "site" (random observations) or "smooth"
  double epsilon = 0.0;
  double delta = 0.0;
  double v_fvi = 0.0;
  double v_rvi = 0.0;
  double gap = 0.0;
  double bound = 0.0;
  bool ok = false;
  double beta_star = 0.0;
  double eta_star = 0.0;
  double delta_t = 0.0;  // per-epsilon gap sensitivity at this horizon
  double zeta_t = 0.0;   // delta-drift amplification factor
  double l_f = 0.0;
  double l_m = 0.0;
};

void write_bounds_csv(const std::string& path, const std::vector<BoundRow>& rows);

struct MonteCarloRow {
  std::string planner;
  int t = 0;
  double mean_logdet = 0.0;
};

void write_montecarlo_csv(const std::string& path, const std::vector<MonteCarloRow>& rows);

// Per-planner summary for the JSON report. Planning scenarios fill the
// final_cost/tree_sizes block; tracking episodes fill the episode block.
struct PlannerReport {
  std::string label;
  std::string kind;
  int horizon = 0;
  double epsilon = 0.0;
  double delta = 0.0;

  bool episode = false;  // true: closed-loop tracking episode
  double final_cost = 0.0;
  double wall_time = 0.0;
  std::vector<std::int64_t> tree_sizes;

  bool lost = false;
  double final_logdet = 0.0;
  double mean_pos_error = 0.0;
  double mean_vel_error = 0.0;

  // Suboptimality certificate, present when an exhaustive reference ran.
  bool has_bound = false;
  double bound = 0.0;
  double gap = 0.0;
  double beta_star = 0.0;
  double eta_star = 0.0;
  double delta_t = 0.0;
  double zeta_t = 0.0;
  double l_f = 0.0;
  double l_m = 0.0;
  bool lipschitz_estimated = false;  // constants are sampled lower bounds
  std::string bound_note;            // set when no bound can be stated
};

struct McConfigReport {
  std::string label;
  std::string kind;
  int horizon = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double mean_pos_rmse = 0.0;
  double mean_vel_rmse = 0.0;
  double mean_final_logdet = 0.0;
  double lost_fraction = 0.0;
};

void write_report_json(const std::string& path, const std::string& command,
                       const ExperimentConfig& config, double wall_time,
                       const std::vector<PlannerReport>& planners,
                       const std::vector<BoundRow>& bounds,
                       const std::vector<McConfigReport>& montecarlo);

}  // namespace infoplan
