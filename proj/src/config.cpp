#include "infoplan/config.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "infoplan/common.hpp"

namespace infoplan {
namespace {

using njson = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

double to_double(const std::string& key, const std::string& raw, bool allow_inf) {
  const std::string v = trim(raw);
  if (v == "inf" || v == "+inf") {
    if (allow_inf) return kInf;
    fail(key, "must be finite");
  }
  if (v.empty()) fail(key, "empty value");
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) fail(key, "not a number: '" + v + "'");
  if (!std::isfinite(x)) fail(key, "must be finite");
  return x;
}

long long to_integer(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty()) fail(key, "empty value");
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) fail(key, "not an integer: '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty() || v[0] == '-') fail(key, "must be a nonnegative integer");
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) fail(key, "not an integer: '" + v + "'");
  return x;
}

std::vector<double> to_dlist(const std::string& key, const std::string& raw, size_t want) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item, false));
  if (out.empty()) fail(key, "expected a comma-separated list of numbers");
  if (want != 0 && out.size() != want)
    fail(key, "expected " + std::to_string(want) + " values, got " + std::to_string(out.size()));
  return out;
}

// Flat key -> raw value map from the text format, with consumption tracking
// so leftovers surface as unknown-key errors.
struct TextReader {
  std::map<std::string, std::string> values;
  std::set<std::string> used;

  const std::string* take(const std::string& key) {
    auto it = values.find(key);
    if (it == values.end()) return nullptr;
    used.insert(key);
    return &it->second;
  }

  void want_string(const std::string& key, std::string& out) {
    if (const auto* v = take(key)) out = trim(*v);
  }
  void want_double(const std::string& key, double& out, bool allow_inf = false) {
    if (const auto* v = take(key)) out = to_double(key, *v, allow_inf);
  }
  void want_int(const std::string& key, int& out) {
    if (const auto* v = take(key)) {
      const long long x = to_integer(key, *v);
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        fail(key, "out of range");
      out = static_cast<int>(x);
    }
  }
  void want_i64(const std::string& key, std::int64_t& out) {
    if (const auto* v = take(key)) out = to_integer(key, *v);
  }
  void want_u64(const std::string& key, std::uint64_t& out) {
    if (const auto* v = take(key)) out = to_u64(key, *v);
  }
  void want_dlist(const std::string& key, std::vector<double>& out, size_t n) {
    if (const auto* v = take(key)) out = to_dlist(key, *v, n);
  }

  void finish() const {
    for (const auto& [key, value] : values)
      if (!used.count(key)) throw ConfigError("unknown config key: " + key);
  }
};

TextReader tokenize_text(const std::string& text) {
  TextReader reader;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    for (char c : key)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_')
        throw ConfigError("line " + std::to_string(lineno) + ": bad key '" + key + "'");
    if (!reader.values.emplace(key, value).second)
      throw ConfigError("duplicate config key: " + key);
  }
  return reader;
}

// Planner entries arrive as planner.<i>.kind etc.; indices must be
// consecutive from zero so a typo'd index cannot silently drop an entry.
void read_planners_text(TextReader& reader, std::vector<PlannerSpec>& planners) {
  int max_index = -1;
  for (const auto& [key, value] : reader.values) {
    if (key.rfind("planner.", 0) != 0) continue;
    const size_t dot = key.find('.', 8);
    const std::string index_str = key.substr(8, dot == std::string::npos ? std::string::npos : dot - 8);
    if (index_str.empty() || dot == std::string::npos) fail(key, "expected planner.<i>.<field>");
    const long long i = to_integer(key, index_str);
    if (i < 0 || i > 999) fail(key, "planner index out of range");
    max_index = std::max(max_index, static_cast<int>(i));
  }
  if (max_index < 0) return;  // no planner keys: keep defaults

  planners.clear();
  for (int i = 0; i <= max_index; ++i) {
    const std::string base = "planner." + std::to_string(i) + ".";
    PlannerSpec spec;
    spec.kind.clear();
    reader.want_string(base + "kind", spec.kind);
    if (spec.kind.empty())
      fail(base + "kind", "required (planner indices must be consecutive from 0)");
    reader.want_int(base + "horizon", spec.horizon);
    reader.want_double(base + "epsilon", spec.epsilon, /*allow_inf=*/true);
    reader.want_double(base + "delta", spec.delta);
    planners.push_back(std::move(spec));
  }
}

// JSON counterparts. Every getter names the field with its dotted path, so
// errors read the same for both formats.
double js_double(const njson& v, const std::string& key, bool allow_inf = false) {
  if (v.is_string()) return to_double(key, v.get<std::string>(), allow_inf);
  if (!v.is_number()) fail(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(key, "must be finite");
  return x;
}

int js_int(const njson& v, const std::string& key) {
  if (!v.is_number_integer()) fail(key, "expected an integer");
  const long long x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    fail(key, "out of range");
  return static_cast<int>(x);
}

std::uint64_t js_u64(const njson& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::uint64_t>(v.get<long long>());
  fail(key, "must be a nonnegative integer");
}

std::string js_string(const njson& v, const std::string& key) {
  if (!v.is_string()) fail(key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> js_dlist(const njson& v, const std::string& key, size_t want) {
  if (!v.is_array() || v.empty()) fail(key, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& item : v) out.push_back(js_double(item, key));
  if (want != 0 && out.size() != want)
    fail(key, "expected " + std::to_string(want) + " values, got " + std::to_string(out.size()));
  return out;
}

void read_gas_json(const njson& obj, GasConfig& gas) {
  for (const auto& [key, v] : obj.items()) {
    const std::string path = "gas." + key;
    if (key == "width") gas.width = js_int(v, path);
    else if (key == "height") gas.height = js_int(v, path);
    else if (key == "cell_size") gas.cell_size = js_double(v, path);
    else if (key == "prior_var") gas.prior_var = js_double(v, path);
    else if (key == "prior_mean") gas.prior_mean = js_double(v, path);
    else if (key == "noise_var") gas.noise_var = js_double(v, path);
    else if (key == "beam_max_range") gas.beam_max_range = js_double(v, path);
    else throw ConfigError("unknown config key: " + path);
  }
}

void read_tracking_json(const njson& obj, TrackingConfig& tr) {
  for (const auto& [key, v] : obj.items()) {
    const std::string path = "tracking." + key;
    if (key == "tau") tr.tau = js_double(v, path);
    else if (key == "q") tr.q = js_double(v, path);
    else if (key == "max_range") tr.max_range = js_double(v, path);
    else if (key == "a0") tr.a0 = js_double(v, path);
    else if (key == "a1") tr.a1 = js_double(v, path);
    else if (key == "a2") tr.a2 = js_double(v, path);
    else if (key == "b0") tr.b0 = js_double(v, path);
    else if (key == "b1") tr.b1 = js_double(v, path);
    else if (key == "xmin") tr.xmin = js_double(v, path);
    else if (key == "xmax") tr.xmax = js_double(v, path);
    else if (key == "ymin") tr.ymin = js_double(v, path);
    else if (key == "ymax") tr.ymax = js_double(v, path);
    else if (key == "sensor_start") tr.sensor_start = js_dlist(v, path, 3);
    else if (key == "target_mean") tr.target_mean = js_dlist(v, path, 4);
    else if (key == "prior_diag") tr.prior_diag = js_dlist(v, path, 4);
    else if (key == "tree_seed") tr.tree_seed = js_u64(v, path);
    else if (key == "tree_count") tr.tree_count = js_int(v, path);
    else if (key == "tree_radius") tr.tree_radius = js_double(v, path);
    else if (key == "tree_separation") tr.tree_separation = js_double(v, path);
    else if (key == "t_max") tr.t_max = js_int(v, path);
    else if (key == "runs") tr.runs = js_int(v, path);
    else throw ConfigError("unknown config key: " + path);
  }
}

void read_random_json(const njson& obj, RandomConfig& rnd) {
  for (const auto& [key, v] : obj.items()) {
    const std::string path = "random." + key;
    if (key == "target_dim") rnd.target_dim = js_int(v, path);
    else if (key == "controls") rnd.controls = js_int(v, path);
    else if (key == "lattice_step") rnd.lattice_step = js_double(v, path);
    else if (key == "w_ridge") rnd.w_ridge = js_double(v, path);
    else throw ConfigError("unknown config key: " + path);
  }
}

void read_verify_json(const njson& obj, VerifyConfig& vf) {
  for (const auto& [key, v] : obj.items()) {
    const std::string path = "verify." + key;
    if (key == "instances") vf.instances = js_int(v, path);
    else if (key == "epsilons") vf.epsilons = js_dlist(v, path, 0);
    else if (key == "deltas") vf.deltas = js_dlist(v, path, 0);
    else if (key == "slope") vf.slope = js_double(v, path);
    else throw ConfigError("unknown config key: " + path);
  }
}

void read_planners_json(const njson& arr, std::vector<PlannerSpec>& planners) {
  if (!arr.is_array()) throw ConfigError("planners: expected an array");
  if (arr.empty()) throw ConfigError("planners: at least one planner is required");
  planners.clear();
  int i = 0;
  for (const auto& item : arr) {
    const std::string base = "planner." + std::to_string(i) + ".";
    if (!item.is_object()) fail(base + "kind", "expected a planner object");
    PlannerSpec spec;
    spec.kind.clear();
    for (const auto& [key, v] : item.items()) {
      if (key == "kind") spec.kind = js_string(v, base + "kind");
      else if (key == "horizon") spec.horizon = js_int(v, base + "horizon");
      else if (key == "epsilon") spec.epsilon = js_double(v, base + "epsilon", /*allow_inf=*/true);
      else if (key == "delta") spec.delta = js_double(v, base + "delta");
      else throw ConfigError("unknown config key: " + base + key);
    }
    if (spec.kind.empty()) fail(base + "kind", "required");
    planners.push_back(std::move(spec));
    ++i;
  }
}

njson double_or_inf(double x) {
  if (std::isinf(x)) return njson("inf");
  return njson(x);
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig config;
  config.planners = {
      {"rvi", 7, 0.1, 1.0},
      {"greedy", 7, 0.0, 0.0},
  };
  return config;
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config = default_experiment_config();
  TextReader reader = tokenize_text(text);

  reader.want_string("scenario", config.scenario);
  reader.want_string("out", config.out_dir);
  reader.want_u64("seed", config.seed);
  reader.want_int("workers", config.workers);
  reader.want_i64("node_cap", config.node_cap);

  read_planners_text(reader, config.planners);

  reader.want_int("gas.width", config.gas.width);
  reader.want_int("gas.height", config.gas.height);
  reader.want_double("gas.cell_size", config.gas.cell_size);
  reader.want_double("gas.prior_var", config.gas.prior_var);
  reader.want_double("gas.prior_mean", config.gas.prior_mean);
  reader.want_double("gas.noise_var", config.gas.noise_var);
  reader.want_double("gas.beam_max_range", config.gas.beam_max_range);

  auto& tr = config.tracking;
  reader.want_double("tracking.tau", tr.tau);
  reader.want_double("tracking.q", tr.q);
  reader.want_double("tracking.max_range", tr.max_range);
  reader.want_double("tracking.a0", tr.a0);
  reader.want_double("tracking.a1", tr.a1);
  reader.want_double("tracking.a2", tr.a2);
  reader.want_double("tracking.b0", tr.b0);
  reader.want_double("tracking.b1", tr.b1);
  reader.want_double("tracking.xmin", tr.xmin);
  reader.want_double("tracking.xmax", tr.xmax);
  reader.want_double("tracking.ymin", tr.ymin);
  reader.want_double("tracking.ymax", tr.ymax);
  reader.want_dlist("tracking.sensor_start", tr.sensor_start, 3);
  reader.want_dlist("tracking.target_mean", tr.target_mean, 4);
  reader.want_dlist("tracking.prior_diag", tr.prior_diag, 4);
  reader.want_u64("tracking.tree_seed", tr.tree_seed);
  reader.want_int("tracking.tree_count", tr.tree_count);
  reader.want_double("tracking.tree_radius", tr.tree_radius);
  reader.want_double("tracking.tree_separation", tr.tree_separation);
  reader.want_int("tracking.t_max", tr.t_max);
  reader.want_int("tracking.runs", tr.runs);

  reader.want_int("random.target_dim", config.random.target_dim);
  reader.want_int("random.controls", config.random.controls);
  reader.want_double("random.lattice_step", config.random.lattice_step);
  reader.want_double("random.w_ridge", config.random.w_ridge);

  reader.want_int("verify.instances", config.verify.instances);
  reader.want_dlist("verify.epsilons", config.verify.epsilons, 0);
  reader.want_dlist("verify.deltas", config.verify.deltas, 0);
  reader.want_double("verify.slope", config.verify.slope);

  reader.finish();
  return config;
}

ExperimentConfig parse_config_json(const std::string& text) {
  njson root;
  try {
    root = njson::parse(text);
  } catch (const njson::exception& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config JSON: expected an object");

  ExperimentConfig config = default_experiment_config();
  for (const auto& [key, v] : root.items()) {
    if (key == "scenario") config.scenario = js_string(v, key);
    else if (key == "out") config.out_dir = js_string(v, key);
    else if (key == "seed") config.seed = js_u64(v, key);
    else if (key == "workers") config.workers = js_int(v, key);
    else if (key == "node_cap") config.node_cap = js_int(v, key);
    else if (key == "planners") read_planners_json(v, config.planners);
    else if (key == "gas") read_gas_json(v, config.gas);
    else if (key == "tracking") read_tracking_json(v, config.tracking);
    else if (key == "random") read_random_json(v, config.random);
    else if (key == "verify") read_verify_json(v, config.verify);
    else throw ConfigError("unknown config key: " + key);
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{' ? parse_config_json(text) : parse_config_text(text);
  }
  throw ConfigError("config file is empty: " + path);
}

void validate_config(const ExperimentConfig& config) {
  const bool gas = config.scenario == "gas";
  const bool tracking = config.scenario == "tracking";
  const bool random = config.scenario == "random";
  if (!gas && !tracking && !random)
    fail("scenario", "unknown scenario '" + config.scenario + "' (expected gas | tracking | random)");
  if (config.out_dir.empty()) fail("out", "must not be empty");
  if (config.workers < 1) fail("workers", "must be at least 1");
  if (config.node_cap < 1) fail("node_cap", "must be at least 1");

  if (config.planners.empty()) throw ConfigError("planners: at least one planner is required");
  for (size_t i = 0; i < config.planners.size(); ++i) {
    const PlannerSpec& p = config.planners[i];
    const std::string base = "planner." + std::to_string(i) + ".";
    if (p.kind != "fvi" && p.kind != "greedy" && p.kind != "rvi")
      fail(base + "kind", "unknown planner '" + p.kind + "' (expected fvi | greedy | rvi)");
    if (p.horizon < 1) fail(base + "horizon", "must be at least 1");
    if (!(p.epsilon >= 0.0)) fail(base + "epsilon", "must be nonnegative");
    if (!(p.delta >= 0.0) || std::isinf(p.delta)) fail(base + "delta", "must be nonnegative and finite");
    if (tracking && p.kind == "fvi")
      fail(base + "kind", "fvi is not available for the tracking scenario");
    // The gas field is static and noise-free, so the reduced planner runs in
    // its exact-pruning mode only; anything else would promise an epsilon
    // bound that the model cannot back.
    if (gas && p.kind == "rvi" && (!std::isinf(p.epsilon) || p.delta != 0.0))
      fail(base + "epsilon", "the gas planner prunes with epsilon = inf, delta = 0 only");
  }

  const GasConfig& g = config.gas;
  if (g.width < 1) fail("gas.width", "must be at least 1");
  if (g.height < 1) fail("gas.height", "must be at least 1");
  if (!(g.cell_size > 0.0)) fail("gas.cell_size", "must be positive");
  if (!(g.prior_var > 0.0)) fail("gas.prior_var", "must be positive");
  if (!(g.noise_var > 0.0)) fail("gas.noise_var", "must be positive");
  if (!(g.beam_max_range > 0.0)) fail("gas.beam_max_range", "must be positive");

  const TrackingConfig& t = config.tracking;
  if (!(t.tau > 0.0)) fail("tracking.tau", "must be positive");
  if (!(t.q >= 0.0)) fail("tracking.q", "must be nonnegative");
  if (!(t.max_range > 0.0)) fail("tracking.max_range", "must be positive");
  if (!(t.a0 > 0.0)) fail("tracking.a0", "must be positive (range noise floor)");
  if (!(t.a1 >= 0.0)) fail("tracking.a1", "must be nonnegative");
  if (!(t.a2 >= 0.0)) fail("tracking.a2", "must be nonnegative");
  if (!(t.b0 > 0.0)) fail("tracking.b0", "must be positive (bearing noise floor)");
  if (!(t.b1 >= 0.0)) fail("tracking.b1", "must be nonnegative");
  if (!(t.xmin < t.xmax)) fail("tracking.xmax", "must exceed tracking.xmin");
  if (!(t.ymin < t.ymax)) fail("tracking.ymax", "must exceed tracking.ymin");
  if (t.sensor_start.size() != 3) fail("tracking.sensor_start", "expected 3 values");
  if (t.target_mean.size() != 4) fail("tracking.target_mean", "expected 4 values");
  if (t.prior_diag.size() != 4) fail("tracking.prior_diag", "expected 4 values");
  for (double d : t.prior_diag)
    if (!(d > 0.0)) fail("tracking.prior_diag", "entries must be positive");
  if (t.tree_count < 0) fail("tracking.tree_count", "must be nonnegative");
  if (!(t.tree_radius > 0.0)) fail("tracking.tree_radius", "must be positive");
  if (!(t.tree_separation >= 0.0)) fail("tracking.tree_separation", "must be nonnegative");
  if (t.t_max < 1) fail("tracking.t_max", "must be at least 1");
  if (t.runs < 0) fail("tracking.runs", "must be nonnegative");
  if (tracking)
    for (size_t i = 0; i < config.planners.size(); ++i)
      if (config.planners[i].horizon > t.t_max)
        fail("planner." + std::to_string(i) + ".horizon", "exceeds tracking.t_max");

  const RandomConfig& r = config.random;
  if (r.target_dim < 1) fail("random.target_dim", "must be at least 1");
  if (r.controls < 1) fail("random.controls", "must be at least 1");
  if (!(r.lattice_step > 0.0)) fail("random.lattice_step", "must be positive");
  if (!(r.w_ridge >= 0.0)) fail("random.w_ridge", "must be nonnegative");

  const VerifyConfig& vf = config.verify;
  if (vf.instances < 1) fail("verify.instances", "must be at least 1");
  for (double e : vf.epsilons)
    if (!(e >= 0.0)) fail("verify.epsilons", "entries must be nonnegative");
  for (double d : vf.deltas)
    if (!(d >= 0.0)) fail("verify.deltas", "entries must be nonnegative");
  if (!(vf.slope > 0.0)) fail("verify.slope", "must be positive");
}

std::string print_defaults() {
  return R"(# infoplan experiment configuration, shown with its defaults. The same
# structure is accepted as JSON (objects instead of dotted keys); a config
# file starting with '{' is read as JSON.

scenario = tracking   # gas | tracking | random
out = out             # output directory (--out overrides)
seed = 0              # master seed; every random draw derives from it
workers = 1           # worker threads (--workers overrides)
node_cap = 500000     # per-level planner node budget (--node-cap overrides)

# Planners to run, planner.<i>.* with consecutive indices from 0. kind is
# fvi | greedy | rvi. epsilon and delta are the rvi pruning tolerances
# (ignored by fvi and greedy): epsilon = 0 prunes exactly dominated nodes
# only, epsilon = inf prunes on any dominance, delta > 0 additionally blends
# covariances of states within that metric distance. The gas scenario always
# plans with epsilon = inf, delta = 0; fvi is unavailable for tracking.
planner.0.kind = rvi
planner.0.horizon = 7
planner.0.epsilon = 0.1
planner.0.delta = 1
planner.1.kind = greedy
planner.1.horizon = 7
planner.1.epsilon = 0
planner.1.delta = 0

# Gas mapping scenario (scenario = gas): a static concentration field on a
# width x height grid, observed through an integrating beam.
gas.width = 20
gas.height = 20
gas.cell_size = 1          # meters per cell edge
gas.prior_var = 400        # per-cell prior variance, ppm^2
gas.prior_mean = 100       # per-cell prior mean, ppm
gas.noise_var = 1          # beam measurement noise variance
gas.beam_max_range = 10    # meters before the beam is cut off

# Target tracking scenario (scenario = tracking): a differential-drive
# sensor measures range and bearing to a target with near-constant-velocity
# dynamics. Range noise is sigma_r = a0 + a1*r*(1 + a2*k) with k the number
# of tree discs the sightline crosses; bearing noise is sigma_a = b0 +
# b1*speed. Ranges beyond max_range return no measurement.
tracking.tau = 0.5                       # sampling period, seconds
tracking.q = 0.2                         # target velocity diffusion strength
tracking.max_range = 15
tracking.a0 = 0.1
tracking.a1 = 0.05
tracking.a2 = 1
tracking.b0 = 0.02
tracking.b1 = 0.05
tracking.xmin = -20                      # workspace box for tree placement
tracking.xmax = 20
tracking.ymin = -20
tracking.ymax = 20
tracking.sensor_start = 0, 0, 0          # x, y, heading
tracking.target_mean = 7, 3, -0.3, 0.2   # prior mean (x, y, vx, vy)
tracking.prior_diag = 4, 4, 0.25, 0.25   # prior covariance diagonal
tracking.tree_seed = 1                   # placement seed
tracking.tree_count = 12
tracking.tree_radius = 0.3
tracking.tree_separation = 2.5           # minimum center-to-center spacing
tracking.t_max = 100                     # closed-loop steps per episode
tracking.runs = 20                       # episodes (montecarlo command)

# Random linear instance (scenario = random): a sensor on a 1-D lattice with
# a random per-site observation model, useful for planner comparisons.
random.target_dim = 2
random.controls = 2        # 2 -> steps {-1,+1}; 3 adds "stay"
random.lattice_step = 0.25
random.w_ridge = 0.1       # floor on the process noise eigenvalues

# Bound verification sweep (the verify command): random instances are solved
# exhaustively and with the reduced planner, and each measured optimality gap
# is checked against its certified bound. Rows with delta = 0 use the
# random-observation family; rows with delta > 0 use a smooth family whose
# continuity constants are known exactly, with observation information
# growing at the given slope.
verify.instances = 50
verify.epsilons = 0, 0.01, 0.05, 0.1
verify.deltas = 0
verify.slope = 0.3
)";
}

std::string config_to_json_string(const ExperimentConfig& config) {
  njson root;
  root["scenario"] = config.scenario;
  root["out"] = config.out_dir;
  root["seed"] = config.seed;
  root["workers"] = config.workers;
  root["node_cap"] = config.node_cap;

  njson planners = njson::array();
  for (const PlannerSpec& p : config.planners) {
    njson item;
    item["kind"] = p.kind;
    item["horizon"] = p.horizon;
    item["epsilon"] = double_or_inf(p.epsilon);
    item["delta"] = p.delta;
    planners.push_back(std::move(item));
  }
  root["planners"] = std::move(planners);

  root["gas"] = {
      {"width", config.gas.width},
      {"height", config.gas.height},
      {"cell_size", config.gas.cell_size},
      {"prior_var", config.gas.prior_var},
      {"prior_mean", config.gas.prior_mean},
      {"noise_var", config.gas.noise_var},
      {"beam_max_range", config.gas.beam_max_range},
  };

  const TrackingConfig& t = config.tracking;
  root["tracking"] = {
      {"tau", t.tau},
      {"q", t.q},
      {"max_range", t.max_range},
      {"a0", t.a0},
      {"a1", t.a1},
      {"a2", t.a2},
      {"b0", t.b0},
      {"b1", t.b1},
      {"xmin", t.xmin},
      {"xmax", t.xmax},
      {"ymin", t.ymin},
      {"ymax", t.ymax},
      {"sensor_start", t.sensor_start},
      {"target_mean", t.target_mean},
      {"prior_diag", t.prior_diag},
      {"tree_seed", t.tree_seed},
      {"tree_count", t.tree_count},
      {"tree_radius", t.tree_radius},
      {"tree_separation", t.tree_separation},
      {"t_max", t.t_max},
      {"runs", t.runs},
  };

  root["random"] = {
      {"target_dim", config.random.target_dim},
      {"controls", config.random.controls},
      {"lattice_step", config.random.lattice_step},
      {"w_ridge", config.random.w_ridge},
  };

  root["verify"] = {
      {"instances", config.verify.instances},
      {"epsilons", config.verify.epsilons},
      {"deltas", config.verify.deltas},
      {"slope", config.verify.slope},
  };

  return root.dump(2) + "\n";
}

}  // namespace infoplan
