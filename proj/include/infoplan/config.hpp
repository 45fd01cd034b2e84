#pragma once
// Experiment configuration for the command-line tool. The native format is a
// flat dotted-key text file (key = value, '#' comments); a JSON document with
// the same field names nested as objects is accepted interchangeably, and
// report files echo the configuration in the JSON form so a run can be
// reproduced from its own report. Config structs hold plain numbers only;
// the command layer materializes worlds and planner options from them.

#include <cstdint>
#include <string>
#include <vector>

namespace infoplan {

struct PlannerSpec {
  std::string kind;     // "fvi" | "greedy" | "rvi"
  int horizon = 7;      // planning steps per invocation
  double epsilon = 0.0; // rvi pruning slack; may be infinity ("inf" in files)
  double delta = 0.0;   // rvi neighborhood radius
};

struct GasConfig {
  int width = 20;
  int height = 20;
  double cell_size = 1.0;
  double prior_var = 400.0;
  double prior_mean = 100.0;
  double noise_var = 1.0;
  double beam_max_range = 10.0;
};

struct TrackingConfig {
  double tau = 0.5;
  double q = 0.2;
  double max_range = 15.0;
  double a0 = 0.1, a1 = 0.05, a2 = 1.0; // range noise coefficients
  double b0 = 0.02, b1 = 0.05;          // bearing noise coefficients
  double xmin = -20.0, xmax = 20.0, ymin = -20.0, ymax = 20.0;
  std::vector<double> sensor_start = {0.0, 0.0, 0.0};      // x, y, heading
  std::vector<double> target_mean = {7.0, 3.0, -0.3, 0.2}; // prior mean
  std::vector<double> prior_diag = {4.0, 4.0, 0.25, 0.25}; // prior cov diagonal
  std::uint64_t tree_seed = 1;
  int tree_count = 12;
  double tree_radius = 0.3;
  double tree_separation = 2.5;
  int t_max = 100; // closed-loop episode length
  int runs = 20;   // episodes per planner in the montecarlo command
};

struct RandomConfig {
  int target_dim = 2;
  int controls = 2;
  double lattice_step = 0.25;
  double w_ridge = 0.1;
};

struct VerifyConfig {
  int instances = 50;
  std::vector<double> epsilons = {0.0, 0.01, 0.05, 0.1};
  std::vector<double> deltas = {0.0};
  // Observation-information slope of the smooth instance family used for
  // delta > 0 rows; its continuity constants are then known exactly.
  double slope = 0.3;
};

struct ExperimentConfig {
  std::string scenario = "tracking"; // gas | tracking | random
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int workers = 1;
  std::int64_t node_cap = 500000;
  std::vector<PlannerSpec> planners; // default: rvi(7, 0.1, 1) and greedy(7)
  GasConfig gas;
  TrackingConfig tracking;
  RandomConfig random;
  VerifyConfig verify;
};

ExperimentConfig default_experiment_config();

// Parsers throw ConfigError naming the offending key. Both reject unknown
// keys, so typos fail loudly instead of silently running defaults.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_json(const std::string& text);

// Reads a config file, sniffing the format from the first non-space byte
// ('{' means JSON). Throws ConfigError when the file cannot be read.
ExperimentConfig load_config_file(const std::string& path);

// Structural validation shared by every command: known scenario and planner
// kinds, at least one planner, positive sizes. Command-specific requirements
// (e.g. montecarlo needs runs >= 1) are checked by the command itself.
void validate_config(const ExperimentConfig& config);

// The default configuration in text form with every field commented; the
// output parses back to default_experiment_config().
std::string print_defaults();

// JSON document with the effective configuration, used as the config echo in
// report files; parse_config_json accepts it verbatim. Infinite epsilon
// serializes as the string "inf" (JSON has no infinity literal).
std::string config_to_json_string(const ExperimentConfig& config);

}  // namespace infoplan
