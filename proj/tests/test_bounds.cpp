#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "infoplan/bounds.hpp"
#include "infoplan/instances.hpp"
#include "test_util.hpp"

using namespace infoplan;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

BoundInputs base_inputs() {
  BoundInputs in;
  in.beta_star = 1.0;
  in.lambda_w_min = 1.0;
  in.n_y = 2;
  in.T = 3;
  return in;
}

// Independent recomputation of zeta as a plain product, kept deliberately
// naive so it cannot share a bug with the log-space implementation.
double zeta_oracle(double lf, double lm, double delta, int t) {
  double prod = 1.0;
  for (int tau = 1; tau <= t - 1; ++tau) {
    double geom = 0.0, p = 1.0;
    for (int s = 1; s <= tau; ++s) {
      p *= lf;
      geom += p;
    }
    prod *= 1.0 + lm * delta * geom;
  }
  return prod;
}

// Constant-observation scenario on a line segment; motion scales distances
// by `shrink` so the motion constant is known too.
LinearScenario constant_obs_scenario(double shrink) {
  LinearScenario sc;
  sc.num_controls = 2;
  auto geom = StateGeometry::euclidean(1);
  sc.motion = [geom, shrink](const SensorState& x, int u) {
    VectorXd c(1);
    c(0) = shrink * x.coord(0) + (u == 0 ? -0.1 : 0.1);
    return SensorState(c, geom);
  };
  sc.x0 = SensorState(VectorXd::Zero(1), geom);
  MatrixXd h(1, 2);
  h << 1.0, 0.5;
  const MatrixXd v = MatrixXd::Identity(1, 1);
  sc.observe = [h, v](int, const SensorState&) { return LinearObservation::make(h, v); };
  sc.target = LinearTargetModel::make(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
  sc.sigma0 = Covariance::validated(MatrixXd::Identity(2, 2));
  sc.sample_state = [geom](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return SensorState(VectorXd::Constant(1, u(rng)), geom);
  };
  return sc;
}

}  // namespace

TEST_CASE("contraction factor") {
  CHECK(eta_star(1.0, 1.0) == 0.5);
  CHECK(eta_star(3.0, 1.0) == 0.75);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(1e-6, 50.0);
  for (int i = 0; i < 200; ++i) {
    const double eta = eta_star(pos(rng), pos(rng));
    CHECK(eta > 0.0);
    CHECK(eta < 1.0);
  }

  CHECK_THROWS_AS(eta_star(1.0, 0.0), BoundInapplicable);
  CHECK_THROWS_AS(eta_star(1.0, -0.5), BoundInapplicable);
  CHECK_THROWS_AS(eta_star(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(eta_star(-2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(eta_star(kInf, 1.0), std::invalid_argument);
}

TEST_CASE("epsilon sensitivity") {
  BoundInputs in = base_inputs();
  CHECK(delta_T_eps(in) == doctest::Approx(3.5).epsilon(1e-14));

  SUBCASE("horizon one leaves only the dimension term") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> pos(0.1, 10.0);
    for (int i = 0; i < 50; ++i) {
      BoundInputs one;
      one.beta_star = pos(rng);
      one.lambda_w_min = pos(rng);
      one.n_y = 1 + static_cast<int>(i % 4);
      one.T = 1;
      CHECK(delta_T_eps(one) == doctest::Approx(one.n_y / one.lambda_w_min).epsilon(1e-14));
    }
  }

  SUBCASE("nondecreasing in the horizon, saturating at the stated limit") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> pos(0.2, 5.0);
    for (int i = 0; i < 40; ++i) {
      BoundInputs v;
      v.beta_star = pos(rng);
      v.lambda_w_min = pos(rng);
      v.n_y = 2;
      const double limit =
          (v.n_y / v.lambda_w_min) *
          (1.0 + (v.beta_star / v.lambda_w_min) * (v.beta_star / v.lambda_w_min));
      double prev = 0.0;
      for (int t = 1; t <= 8; ++t) {
        v.T = t;
        const double cur = delta_T_eps(v);
        CHECK(cur >= prev);
        CHECK(cur <= limit * (1.0 + 1e-12));
        prev = cur;
      }
      v.T = 2000;
      CHECK(delta_T_eps(v) == doctest::Approx(limit).epsilon(1e-9));
    }
  }

  SUBCASE("inapplicable without a noise floor") {
    in.lambda_w_min = 0.0;
    CHECK_THROWS_WITH_AS(delta_T_eps(in), doctest::Contains("inapplicable"), BoundInapplicable);
  }
}

TEST_CASE("drift amplification factor") {
  CHECK(zeta(1.0, 1.0, 0.1, 1) == 1.0);
  CHECK(zeta(7.0, 3.0, 2.0, 1) == 1.0);
  for (int t = 1; t <= 50; t += 7) CHECK(zeta(2.0, 5.0, 0.0, t) == 1.0);

  CHECK(zeta(1.0, 1.0, 0.1, 3) == doctest::Approx(1.32).epsilon(1e-12));
  // Two more hand-worked points, geometric sums written out long-hand:
  // L_f=0.5: inner sums 0.5, 0.75, 0.875 -> factors 1.2, 1.3, 1.35.
  CHECK(zeta(0.5, 2.0, 0.2, 4) == doctest::Approx(1.2 * 1.3 * 1.35).epsilon(1e-12));
  // L_f=2: inner sums 2, 6 -> factors 1.1, 1.3.
  CHECK(zeta(2.0, 0.5, 0.1, 3) == doctest::Approx(1.43).epsilon(1e-12));

  SUBCASE("agrees with the naive product when that product is representable") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> rate(0.0, 2.0);
    std::uniform_real_distribution<double> rad(0.0, 0.8);
    for (int i = 0; i < 100; ++i) {
      const double lf = rate(rng), lm = rate(rng), d = rad(rng);
      const int t = 1 + static_cast<int>(rng() % 10);
      CHECK(zeta(lf, lm, d, t) == doctest::Approx(zeta_oracle(lf, lm, d, t)).epsilon(1e-10));
    }
  }

  SUBCASE("monotone in each argument") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> rate(0.1, 1.5);
    for (int i = 0; i < 50; ++i) {
      const double lf = rate(rng), lm = rate(rng), d = rate(rng);
      const int t = 2 + static_cast<int>(rng() % 6);
      const double ref = zeta(lf, lm, d, t);
      CHECK(ref >= 1.0);
      CHECK(zeta(lf, lm, d, t + 1) >= ref);
      CHECK(zeta(lf, lm + 0.3, d, t) >= ref);
      CHECK(zeta(lf, lm, d + 0.3, t) >= ref);
    }
  }

  SUBCASE("saturates to infinity instead of corrupting") {
    const double huge = zeta(3.0, 1.0, 1.0, 500);
    CHECK(std::isinf(huge));
    CHECK(huge > 0.0);
    CHECK(std::isfinite(zeta(3.0, 1.0, 1.0, 5)));
  }

  CHECK_THROWS_AS(zeta(1.0, 1.0, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(zeta(-1.0, 1.0, 0.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(zeta(1.0, -1.0, 0.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(zeta(1.0, 1.0, -0.1, 3), std::invalid_argument);
}

TEST_CASE("combined pruning bound") {
  BoundInputs in = base_inputs();
  in.epsilon = 0.1;

  SUBCASE("zero-radius case is the plain epsilon sensitivity") {
    CHECK(bound_eps_delta(in, 5.0) == doctest::Approx(0.35).epsilon(1e-14));

    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> pos(0.1, 5.0);
    for (int i = 0; i < 50; ++i) {
      BoundInputs v;
      v.beta_star = pos(rng);
      v.lambda_w_min = pos(rng);
      v.n_y = 2 + static_cast<int>(i % 2);
      v.T = 2 + static_cast<int>(i % 4);
      v.epsilon = 0.2 * pos(rng);
      v.logdet_W = -1.0;
      CHECK(bound_eps_delta(v, 3.0) == v.epsilon * delta_T_eps(v));
    }

    in.epsilon = 0.0;
    CHECK(bound_eps_delta(in, 5.0) == 0.0);
  }

  SUBCASE("hand-worked point with positive radius") {
    in.delta = 0.1;
    in.L_f = 1.0;
    in.L_m = 1.0;
    in.logdet_W = 0.0;
    // zeta_2 = 1.1, zeta_3 = 1.32, eta = 0.5:
    //   drift term (1.32 - 1) * (2 - 0) = 0.64
    //   Delta     2 * (1 + 1.32*0.25 + 1.2*0.5) = 3.86
    CHECK(bound_eps_delta(in, 2.0) == doctest::Approx(1.026).epsilon(1e-12));
  }

  SUBCASE("second hand-worked point exercising all inputs at once") {
    BoundInputs v;
    v.beta_star = 2.0;
    v.lambda_w_min = 0.5;
    v.n_y = 3;
    v.T = 4;
    v.epsilon = 0.05;
    v.delta = 0.2;
    v.L_f = 0.5;
    v.L_m = 2.0;
    v.logdet_W = -1.0;
    // eta = 0.8; zeta = 1, 1.2, 1.56, 2.106;
    // weighted sum = 2.106*0.512 + 1.755*0.64 + 1.35*0.8 = 3.281472
    // Delta = 6 * (1 + 4 * 3.281472) = 84.755328
    // bound = 1.106 * 2 + 0.05 * 84.755328 = 6.4497664
    CHECK(bound_eps_delta(v, 1.0) == doctest::Approx(6.4497664).epsilon(1e-10));
  }

  SUBCASE("continuous across the zero-radius seam") {
    in.L_f = 1.3;
    in.L_m = 0.7;
    in.logdet_W = -2.0;
    in.delta = 0.0;
    const double at_zero = bound_eps_delta(in, 4.0);
    in.delta = 1e-12;
    CHECK(bound_eps_delta(in, 4.0) == doctest::Approx(at_zero).epsilon(1e-9));
  }

  SUBCASE("nonnegative and monotone in epsilon") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> pos(0.1, 4.0);
    for (int i = 0; i < 60; ++i) {
      BoundInputs v;
      v.beta_star = pos(rng);
      v.lambda_w_min = pos(rng);
      v.n_y = 2;
      v.T = 2 + static_cast<int>(rng() % 4);
      v.epsilon = 0.1 * pos(rng);
      v.delta = 0.1 * pos(rng);
      v.L_f = pos(rng);
      v.L_m = 0.2 * pos(rng);
      v.logdet_W = -pos(rng);
      const double b = bound_eps_delta(v, 2.0);
      CHECK(b >= 0.0);
      v.epsilon += 0.5;
      CHECK(bound_eps_delta(v, 2.0) >= b);
    }
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(bound_eps_delta(in, in.logdet_W - 1.0), std::invalid_argument);
    in.lambda_w_min = 0.0;
    CHECK_THROWS_WITH_AS(bound_eps_delta(in, 5.0), doctest::Contains("inapplicable"),
                         BoundInapplicable);
    in = base_inputs();
    in.epsilon = -0.1;
    CHECK_THROWS_AS(bound_eps_delta(in, 5.0), std::invalid_argument);
  }
}

TEST_CASE("peak eigenvalue over a trajectory") {
  const auto ident = Covariance::validated(MatrixXd::Identity(3, 3));
  CHECK(peak_error({ident, ident, ident}) == 1.0);

  MatrixXd a = MatrixXd::Zero(2, 2), b = MatrixXd::Zero(2, 2);
  a.diagonal() << 1.0, 4.0;
  b.diagonal() << 2.0, 2.0;
  std::vector<Covariance> seq{Covariance::validated(a), Covariance::validated(b)};
  CHECK(peak_error(seq) == doctest::Approx(4.0).epsilon(1e-13));

  MatrixXd small = MatrixXd::Zero(2, 2);
  small.diagonal() << 0.5, 0.5;
  const double before = peak_error(seq);
  seq.push_back(Covariance::validated(small));
  CHECK(peak_error(seq) == before);

  CHECK_THROWS_AS(peak_error({}), InvalidMatrix);
}

TEST_CASE("continuity constant estimation") {
  SUBCASE("translation motion has ratio exactly one") {
    RandomInstanceParams p;
    p.seed = 101;
    const LinearScenario sc = make_random_instance(p);
    const LipschitzEstimate est = estimate_lipschitz(sc, 80, 5);
    CHECK(est.L_f == 1.0);
    CHECK(est.L_m > 0.0);
    CHECK(est.lower_bound_only);
    CHECK(!est.note.empty());
  }

  SUBCASE("constant observation model needs no continuity slack") {
    const LinearScenario sc = constant_obs_scenario(1.0);
    const LipschitzEstimate est = estimate_lipschitz(sc, 60, 7);
    CHECK(est.L_m == 0.0);
    CHECK(est.L_f == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("contractive motion is measured, not assumed") {
    const LinearScenario sc = constant_obs_scenario(0.25);
    const LipschitzEstimate est = estimate_lipschitz(sc, 60, 7);
    CHECK(est.L_f == doctest::Approx(0.25).epsilon(1e-12));
  }

  SUBCASE("estimates grow with nested samples") {
    RandomInstanceParams p;
    p.seed = 102;
    const LinearScenario sc = make_random_instance(p);
    const LipschitzEstimate small = estimate_lipschitz(sc, 40, 9);
    const LipschitzEstimate large = estimate_lipschitz(sc, 120, 9);
    CHECK(small.L_f <= large.L_f);
    CHECK(small.L_m <= large.L_m);
  }

  SUBCASE("stays below the analytic constant of the scaled-information family") {
    RandomInstanceParams p;
    p.seed = 103;
    p.T = 4;
    const double slope = 0.3;
    const ContinuityInstance inst = make_continuity_instance(p, slope);
    const LipschitzEstimate est = estimate_lipschitz(inst.scenario, 100, 11);
    CHECK(est.L_f == 1.0);
    CHECK(est.L_m <= inst.L_m + 1e-9);
    CHECK(est.L_m >= 0.5 * slope);
  }

  SUBCASE("information-free pairs are skipped rather than crashing") {
    LinearScenario sc = constant_obs_scenario(1.0);
    sc.observe = [](int, const SensorState&) { return LinearObservation::absent(2); };
    const LipschitzEstimate est = estimate_lipschitz(sc, 20, 13);
    CHECK(est.L_m == 0.0);
    CHECK(est.skipped_pairs > 0);
  }

  SUBCASE("query validation") {
    LinearScenario sc = constant_obs_scenario(1.0);
    CHECK_THROWS_AS(estimate_lipschitz(sc, 1, 3), ConfigError);
    sc.sample_state = nullptr;
    CHECK_THROWS_AS(estimate_lipschitz(sc, 50, 3), ConfigError);
  }
}

TEST_CASE("measured pruning gaps respect the certified bound") {
  SearchOptions opts;

  SUBCASE("zero-radius pruning across random instances") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      RandomInstanceParams p;
      p.n_y = 2 + static_cast<int>(seed % 2);
      p.num_controls = 2 + static_cast<int>((seed / 2) % 2);
      p.T = 3 + static_cast<int>(seed % 2);
      p.seed = 900 + seed;
      const LinearScenario sc = make_random_instance(p);
      for (double eps : {0.01, 0.1}) {
        const GapReport r = measure_gap(sc, p.T, eps, 0.0, 0.0, 0.0, opts);
        CAPTURE(seed);
        CAPTURE(eps);
        CHECK(r.ok);
        CHECK(r.gap >= 0.0);
        CHECK(r.gap <= r.bound);

        // Independent route to the same ceiling.
        BoundInputs in;
        in.beta_star = r.beta_star;
        in.lambda_w_min = sc.target.w_min_eig;
        in.n_y = p.n_y;
        in.T = p.T;
        in.epsilon = eps + opts.redundancy_tol;
        CHECK(r.bound == doctest::Approx(in.epsilon * delta_T_eps(in)).epsilon(1e-12));
        ++checked;
      }
    }
    CHECK(checked == 24);
  }

  SUBCASE("positive-radius pruning on the family with known constants") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      RandomInstanceParams p;
      p.T = 3 + static_cast<int>(seed % 2);
      p.seed = 950 + seed;
      const ContinuityInstance inst = make_continuity_instance(p, 0.3);
      for (double delta : {0.1, 0.5}) {
        const GapReport r =
            measure_gap(inst.scenario, p.T, 0.05, delta, inst.L_f, inst.L_m, opts);
        CAPTURE(seed);
        CAPTURE(delta);
        CHECK(r.ok);
        CHECK(r.gap >= 0.0);
        CHECK(r.gap <= r.bound);
      }
    }
  }

  SUBCASE("the documented reference instance") {
    RandomInstanceParams p;
    p.n_y = 2;
    p.num_controls = 3;
    p.T = 4;
    p.seed = 424242;
    const LinearScenario sc = make_random_instance(p);
    const GapReport r = measure_gap(sc, p.T, 0.05, 0.0, 0.0, 0.0, opts);
    CHECK(r.ok);
    CHECK(r.v_reduced >= r.v_exact);
    CHECK(r.beta_star > 0.0);
  }
}
