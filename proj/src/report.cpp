#include "infoplan/report.hpp"

#include <json.hpp>

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "infoplan/common.hpp"

namespace infoplan {
namespace {

using njson = nlohmann::ordered_json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file: " + path);
  return out;
}

void schema_line(std::ofstream& out, const std::string& name) {
  out << "# infoplan." << name << ".v" << kCsvSchemaVersion << "\n";
}

njson double_or_inf(double x) {
  if (std::isinf(x)) return njson("inf");
  return njson(x);
}

njson planner_json(const PlannerReport& p) {
  njson item;
  item["label"] = p.label;
  item["kind"] = p.kind;
  item["horizon"] = p.horizon;
  item["epsilon"] = double_or_inf(p.epsilon);
  item["delta"] = p.delta;
  if (p.episode) {
    item["final_logdet"] = p.final_logdet;
    item["mean_pos_error"] = p.mean_pos_error;
    item["mean_vel_error"] = p.mean_vel_error;
    item["lost"] = p.lost;
  } else {
    item["final_cost"] = p.final_cost;
    item["tree_sizes"] = p.tree_sizes;
    item["wall_time"] = p.wall_time;
  }
  if (p.has_bound) {
    njson b;
    b["beta_star"] = p.beta_star;
    b["eta_star"] = p.eta_star;
    b["delta_t"] = p.delta_t;
    b["zeta_t"] = double_or_inf(p.zeta_t);
    b["l_f"] = p.l_f;
    b["l_m"] = p.l_m;
    b["lipschitz_estimated"] = p.lipschitz_estimated;
    // Infinite ceilings happen legitimately (epsilon = inf, or a saturated
    // drift product); JSON has no infinity literal, so they serialize as the
    // string "inf" rather than nlohmann's null.
    b["bound"] = double_or_inf(p.bound);
    b["gap"] = p.gap;
    item["bound"] = std::move(b);
  }
  if (!p.bound_note.empty()) item["bound_note"] = p.bound_note;
  return item;
}

njson bound_row_json(const BoundRow& r) {
  njson item;
  item["instance"] = r.instance;
  item["family"] = r.family;
  item["epsilon"] = r.epsilon;
  item["delta"] = r.delta;
  item["v_fvi"] = r.v_fvi;
  item["v_rvi"] = r.v_rvi;
  item["gap"] = r.gap;
  item["bound"] = double_or_inf(r.bound);
  item["ok"] = r.ok;
  item["beta_star"] = r.beta_star;
  item["eta_star"] = r.eta_star;
  item["delta_t"] = r.delta_t;
  item["zeta_t"] = double_or_inf(r.zeta_t);
  item["l_f"] = r.l_f;
  item["l_m"] = r.l_m;
  return item;
}

}  // namespace

std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(const std::string& path, const std::vector<std::string>& coord_names,
                          const std::vector<TrajectoryPoint>& rows) {
  std::ofstream out = open_out(path);
  schema_line(out, "trajectory");
  out << "t";
  for (const std::string& name : coord_names) out << "," << name;
  out << ",cost_to_date\n";
  for (const TrajectoryPoint& row : rows) {
    out << row.t;
    for (double c : row.coords) out << "," << format_full(c);
    out << "," << format_full(row.cost_to_date) << "\n";
  }
}

void write_tree_sizes_csv(const std::string& path, const std::vector<TreeSizeRow>& rows) {
  std::ofstream out = open_out(path);
  schema_line(out, "tree_sizes");
  out << "t,planner,nodes\n";
  for (const TreeSizeRow& row : rows)
    out << row.t << "," << row.planner << "," << row.nodes << "\n";
}

void write_bounds_csv(const std::string& path, const std::vector<BoundRow>& rows) {
  std::ofstream out = open_out(path);
  schema_line(out, "bounds");
  out << "instance,epsilon,delta,v_fvi,v_rvi,gap,bound,ok\n";
  for (const BoundRow& row : rows) {
    out << row.instance << "," << format_full(row.epsilon) << "," << format_full(row.delta) << ","
        << format_full(row.v_fvi) << "," << format_full(row.v_rvi) << "," << format_full(row.gap)
        << "," << format_full(row.bound) << "," << (row.ok ? 1 : 0) << "\n";
  }
}

void write_montecarlo_csv(const std::string& path, const std::vector<MonteCarloRow>& rows) {
  std::ofstream out = open_out(path);
  schema_line(out, "montecarlo");
  out << "planner,t,mean_logdet\n";
  for (const MonteCarloRow& row : rows)
    out << row.planner << "," << row.t << "," << format_full(row.mean_logdet) << "\n";
}

void write_report_json(const std::string& path, const std::string& command,
                       const ExperimentConfig& config, double wall_time,
                       const std::vector<PlannerReport>& planners,
                       const std::vector<BoundRow>& bounds,
                       const std::vector<McConfigReport>& montecarlo) {
  njson root;
  root["schema"] = "infoplan.report.v1";
  root["command"] = command;
  root["versions"] = {
      {"infoplan", kInfoplanVersion},
      {"csv_schema", kCsvSchemaVersion},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                    "." + std::to_string(EIGEN_MINOR_VERSION)},
  };
  root["config"] = njson::parse(config_to_json_string(config));
  root["wall_time"] = wall_time;

  if (!planners.empty()) {
    njson arr = njson::array();
    for (const PlannerReport& p : planners) arr.push_back(planner_json(p));
    root["planners"] = std::move(arr);
  }
  if (!bounds.empty()) {
    njson arr = njson::array();
    for (const BoundRow& r : bounds) arr.push_back(bound_row_json(r));
    root["bounds"] = std::move(arr);
  }
  if (!montecarlo.empty()) {
    njson arr = njson::array();
    for (const McConfigReport& m : montecarlo) {
      njson item;
      item["label"] = m.label;
      item["kind"] = m.kind;
      item["horizon"] = m.horizon;
      item["epsilon"] = double_or_inf(m.epsilon);
      item["delta"] = m.delta;
      item["mean_pos_rmse"] = m.mean_pos_rmse;
      item["mean_vel_rmse"] = m.mean_vel_rmse;
      item["mean_final_logdet"] = m.mean_final_logdet;
      item["lost_fraction"] = m.lost_fraction;
      arr.push_back(std::move(item));
    }
    root["montecarlo"] = std::move(arr);
  }

  std::ofstream out = open_out(path);
  out << root.dump(2) << "\n";
}

}  // namespace infoplan
