#pragma once
// Randomized linear planning instances for the verification harness. The
// sensor walks a 1-D lattice, so distinct control sequences frequently land
// on the same site and give the planners something to prune. Two families:
// per-site random observations, and a smoothly varying observation model
// whose continuity constants are known in closed form.

#include <cstdint>

#include "infoplan/search.hpp"

namespace infoplan {

struct RandomInstanceParams {
  int n_y = 2;           // target dimension
  int num_controls = 2;  // 2 -> steps {-1,+1}; 3 adds "stay"
  int T = 3;             // planning horizon the instance is sized for
  double lattice_step = 0.25;
  double w_ridge = 0.1;  // ridge added to the process noise, so min eig >= this
  std::uint64_t seed = 0;
};

// Each lattice site carries a fixed random observation model drawn from a
// hash of (seed, site), so revisiting a site always yields the same (H, V)
// without any stored table.
LinearScenario make_random_instance(const RandomInstanceParams& params);

struct ContinuityInstance {
  LinearScenario scenario;
  // Lattice translation preserves distances exactly, so the motion constant
  // is 1; the observation constant is exact for the constructed family.
  double L_f = 1.0;
  double L_m = 0.0;
};

// Observation information varies smoothly with position:
//   M(x) = (1 + slope * x) * H0^T H0,
// realized as H(x) = sqrt(1 + slope * x) * H0 with unit noise. Over the
// reachable range |x| <= T * lattice_step the one-sided continuity constant
// is L_m = slope / (1 - slope * T * lattice_step); slope must keep the
// factor positive across that range.
ContinuityInstance make_continuity_instance(const RandomInstanceParams& params, double slope);

}  // namespace infoplan
