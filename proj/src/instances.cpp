#include "infoplan/instances.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

namespace infoplan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::mt19937_64 site_rng(std::uint64_t seed, std::int64_t site) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(site))));
}

MatrixXd gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

MatrixXd ridged_gram(std::mt19937_64& rng, Index n, double ridge) {
  MatrixXd g = gaussian_matrix(rng, n, n);
  MatrixXd m = g * g.transpose() / static_cast<double>(n);
  m += ridge * MatrixXd::Identity(n, n);
  return 0.5 * (m + m.transpose());
}

// Control id -> lattice offset; first the unit steps, then "stay", then
// wider strides, so the 2- and 3-control sets match the harness families.
int control_offset(int u) {
  static const int first[] = {-1, 1, 0};
  if (u < 3) return first[u];
  const int stride = 2 + (u - 3) / 2;
  return (u % 2 == 1) ? -stride : stride;
}

void validate(const RandomInstanceParams& p) {
  if (p.n_y < 1) throw ConfigError("instance target dimension must be positive");
  if (p.num_controls < 1) throw ConfigError("instance needs at least one control");
  if (p.T < 1) throw ConfigError("instance horizon must be at least 1");
  if (!(p.lattice_step > 0.0)) throw ConfigError("lattice step must be positive");
  if (!(p.w_ridge >= 0.0)) throw ConfigError("process noise ridge must be nonnegative");
}

// Shared scaffolding: lattice motion, random target model and prior.
LinearScenario lattice_base(const RandomInstanceParams& p) {
  LinearScenario sc;
  sc.num_controls = p.num_controls;

  auto geometry = StateGeometry::euclidean(1);
  const double step = p.lattice_step;
  sc.motion = [geometry, step](const SensorState& x, int u) {
    VectorXd c(1);
    c(0) = x.coord(0) + control_offset(u) * step;
    return SensorState(c, geometry);
  };
  sc.x0 = SensorState(VectorXd::Zero(1), geometry);

  // Uniform draw over the lattice sites reachable within the horizon.
  long stride = 0;
  for (int u = 0; u < p.num_controls; ++u)
    stride = std::max(stride, std::labs(control_offset(u)));
  const long span = stride * p.T;
  sc.sample_state = [geometry, step, span](std::mt19937_64& rng) {
    std::uniform_int_distribution<long> site(-span, span);
    VectorXd c(1);
    c(0) = site(rng) * step;
    return SensorState(c, geometry);
  };

  std::mt19937_64 rng = site_rng(p.seed, -1);  // model draw, distinct from any site
  MatrixXd a = MatrixXd::Identity(p.n_y, p.n_y) + 0.2 * gaussian_matrix(rng, p.n_y, p.n_y);
  MatrixXd w = ridged_gram(rng, p.n_y, p.w_ridge);
  sc.target = LinearTargetModel::make(std::move(a), std::move(w));
  sc.sigma0 = Covariance::validated(ridged_gram(rng, p.n_y, 0.5));
  return sc;
}

}  // namespace

LinearScenario make_random_instance(const RandomInstanceParams& params) {
  validate(params);
  LinearScenario sc = lattice_base(params);

  const int n_y = params.n_y;
  const double step = params.lattice_step;
  const std::uint64_t seed = params.seed;
  sc.observe = [n_y, step, seed](int, const SensorState& x) {
    const auto site = std::llround(x.coord(0) / step);
    std::mt19937_64 rng = site_rng(seed, site);
    MatrixXd h = gaussian_matrix(rng, n_y, n_y);
    MatrixXd v = ridged_gram(rng, n_y, 0.25);
    return LinearObservation::make(std::move(h), std::move(v));
  };
  return sc;
}

ContinuityInstance make_continuity_instance(const RandomInstanceParams& params, double slope) {
  validate(params);
  if (!(slope >= 0.0)) throw ConfigError("observation slope must be nonnegative");
  const double reach = params.T * params.lattice_step;
  if (slope * reach >= 1.0)
    throw ConfigError("observation slope too steep: information would vanish within reach");

  ContinuityInstance inst;
  inst.scenario = lattice_base(params);
  inst.L_f = 1.0;
  inst.L_m = slope / (1.0 - slope * reach);

  std::mt19937_64 rng = site_rng(params.seed, -2);
  MatrixXd h0 = gaussian_matrix(rng, params.n_y, params.n_y);
  const MatrixXd v = MatrixXd::Identity(params.n_y, params.n_y);
  inst.scenario.observe = [h0, v, slope](int, const SensorState& x) {
    const double factor = 1.0 + slope * x.coord(0);
    // Reachable states keep the factor positive; clamp guards replay of
    // out-of-family control sequences.
    return LinearObservation::make(std::sqrt(std::max(factor, 0.0)) * h0, v);
  };
  return inst;
}

}  // namespace infoplan
