#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "litt/assembly.hpp"
#include "litt/errors.hpp"
#include "litt/forward.hpp"
#include "test_support.hpp"

using namespace litt;
using doctest::Approx;

namespace {

GeometryConfig coarse_geometry() {
  GeometryConfig g;
  g.target_edge_size = 2.5e-3;
  return g;
}

TissueParams adiabatic_params() {
  TissueParams p;
  p.alpha_cool = 0.0;
  p.alpha_amb = 0.0;
  return p;
}

double integral(const BioheatModel& model, std::span<const double> f) {
  return dot(Vector(f.size(), 1.0), model.mass().multiply(f));
}

double min_of(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }
double max_of(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }

double rel_l2_diff(const BioheatModel& model, std::span<const double> a,
                   std::span<const double> b) {
  Vector d(a.begin(), a.end());
  axpy(-1.0, b, d);
  return weighted_norm(d, model.mass()) / weighted_norm(a, model.mass());
}

}  // namespace

TEST_CASE("step count") {
  CHECK(step_count(0.0, 60.0, 2.0) == 30);
  CHECK(step_count(60.0, 120.0, 1.0) == 60);
  CHECK_THROWS_AS(step_count(0.0, 10.0, 3.0), InvalidArgument);
  CHECK_THROWS_AS(step_count(0.0, 10.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(step_count(10.0, 10.0, 1.0), InvalidArgument);
}

TEST_CASE("adiabatic equilibrium keeps a constant field") {
  const BioheatModel model(build_mesh(coarse_geometry()), adiabatic_params());
  const Field T = model.uniform(312.0);
  const Field zero = model.uniform(0.0);
  const Field next = model.step_bioheat(T, zero, zero, zero, 1.0);
  CHECK(test::max_abs_diff(next, T) <= 1e-9);
}

TEST_CASE("uniform perfusion relaxes like the lumped oracle") {
  ModelOptions tight;
  tight.linear.rel_tol = 1e-14;
  const BioheatModel model(build_mesh(coarse_geometry()), adiabatic_params(), tight);
  const double xi = 6e4, dt = 1.0, Tb = model.params().T_b;
  const double a = dt * xi / (1.08e3 * 3.69e3);
  const double expected = (310.0 + a * Tb) / (1.0 + a);
  CHECK(expected == Approx(309.7767).epsilon(1e-6));
  const Field zero = model.uniform(0.0);
  const Field next = model.step_bioheat(model.uniform(310.0), zero, zero, model.uniform(xi), dt);
  for (double v : next) CHECK(std::abs(v - expected) <= 1e-10);
}

TEST_CASE("global steady state") {
  TissueParams p;
  p.T_cool = p.T_b;
  const BioheatModel model(build_mesh(coarse_geometry()), p);
  const Field zero = model.uniform(0.0);
  std::mt19937_64 rng(21);
  const Field xi = test::random_vector(model.num_nodes(), rng, 0.0, 6e4);
  const Field next = model.step_bioheat(model.uniform(p.T_b), zero, zero, xi, 2.0);
  CHECK(test::max_abs_diff(next, model.uniform(p.T_b)) <= 1e-9);
}

TEST_CASE("radiation") {
  const BioheatModel model(build_mesh(coarse_geometry()), TissueParams{});
  const AxiMesh& mesh = model.mesh();
  std::mt19937_64 rng(22);

  SUBCASE("laser off gives zero radiation") {
    const Field phi = model.solve_radiation(model.uniform(0.0), 10.0);
    for (double v : phi) CHECK(v == 0.0);
    CHECK(model.solve_radiation(model.uniform(0.0), 1190.0) == model.uniform(0.0));
  }

  SUBCASE("flux balance with the constant test function") {
    for (const Field& omega : {model.uniform(0.0), test::random_vector(mesh.num_nodes(), rng, 0.0, 3.0)}) {
      const double t = 100.0;
      const Field phi = model.solve_radiation(omega, t);
      // Total applied power over the 2 pi-dropped surface of revolution.
      const double inflow = laser_power(model.params(), t) / (2.0 * std::numbers::pi);
      const Vector load = model.radiation_load(t);
      CHECK(std::accumulate(load.begin(), load.end(), 0.0) == Approx(inflow).epsilon(1e-13));
      Field mu(omega.size());
      for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = blended_optics(model.params(), omega[i]).mu_a;
      const Vector ones(mu.size(), 1.0);
      const double absorbed = dot(ones, assemble_mass(mesh, mu).multiply(phi));
      const double escaped = dot(ones, assemble_boundary_mass(mesh, {BoundaryTag::Amb}, 0.5).multiply(phi));
      CHECK(std::abs(absorbed + escaped - inflow) <= 1e-8 * inflow);
      CHECK(min_of(phi) >= -1e-9 * max_of(phi));
    }
  }

  SUBCASE("doubling the applied power doubles the radiation") {
    TissueParams p2;
    p2.q_hat_app = 2.0 * p2.q_hat_app;
    const BioheatModel doubled(mesh, p2);
    const Field omega = test::random_vector(mesh.num_nodes(), rng, 0.0, 2.0);
    const Field a = model.solve_radiation(omega, 50.0);
    const Field b = doubled.solve_radiation(omega, 50.0);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == Approx(2.0 * a[i]).epsilon(1e-9));
  }
}

TEST_CASE("damage accumulation") {
  const BioheatModel model(build_mesh(coarse_geometry()), TissueParams{});
  const TissueParams& p = model.params();
  const Field T = model.uniform(294.95);
  Field omega = model.uniform(0.0);
  for (int k = 0; k < 1200; ++k) omega = model.update_damage(omega, T, T, 1.0);
  const double rate = p.A_freq * std::exp(-p.E_a / (p.R_gas * 294.95));
  for (double v : omega) CHECK(v == Approx(1200.0 * rate).epsilon(1e-9));
  CHECK(omega[0] == Approx(1.98e-10).epsilon(0.01));

  const Field w0 = model.uniform(0.3);
  CHECK(model.update_damage(w0, model.uniform(400.0), model.uniform(400.0), 0.0) == w0);
  CHECK(model.update_damage(w0, model.uniform(0.0), model.uniform(0.0), 5.0) == w0);

  ModelOptions frozen;
  frozen.couple_damage = false;
  const BioheatModel fixed(model.mesh(), p, frozen);
  CHECK(fixed.update_damage(w0, model.uniform(380.0), model.uniform(380.0), 1.0) == w0);
}

TEST_CASE("laser off and no perfusion keeps the resting temperature") {
  TissueParams p;
  p.T_cool = p.T0;
  const BioheatModel model(build_mesh(coarse_geometry()), p);
  const auto traj = model.run_forward(model.uniform(0.0), model.uniform(p.T0), model.uniform(0.0),
                                      0.0, 20.0, 1.0);
  REQUIRE(traj.steps() == 20);
  CHECK(traj.T.front() == model.uniform(p.T0));
  for (const Field& T : traj.T) CHECK(test::max_abs_diff(T, model.uniform(p.T0)) <= 1e-9);
  for (const Field& phi : traj.phi) CHECK(test::max_abs(phi) == 0.0);
}

TEST_CASE("adiabatic runs conserve energy") {
  const BioheatModel model(build_mesh(coarse_geometry()), adiabatic_params());
  std::mt19937_64 rng(23);
  const Field T0 = test::random_vector(model.num_nodes(), rng, 300.0, 340.0);
  const auto traj =
      model.run_forward(model.uniform(0.0), T0, model.uniform(0.0), 0.0, 20.0, 0.5);
  const double e0 = integral(model, traj.T.front());
  for (std::size_t k = 1; k < traj.T.size(); ++k) {
    const double prev = integral(model, traj.T[k - 1]);
    CHECK(std::abs(integral(model, traj.T[k]) - prev) <= 1e-10 * std::abs(prev));
  }
  CHECK(std::abs(integral(model, traj.T.back()) - e0) <= 1e-10 * e0);
}

TEST_CASE("discrete maximum principle with the laser off") {
  const BioheatModel model(build_mesh(coarse_geometry()), TissueParams{});
  const TissueParams& p = model.params();
  std::mt19937_64 rng(24);
  const Field xi = test::random_vector(model.num_nodes(), rng, 0.0, 6e4);
  Field T = test::random_vector(model.num_nodes(), rng, 300.0, 330.0);
  const Field zero = model.uniform(0.0);
  const HeatOperator op = model.heat_operator(xi, 1.0);
  for (int k = 0; k < 10; ++k) {
    const Field next = model.step_bioheat(op, T, zero, zero);
    const double floor = std::min({min_of(T), p.T_b, p.T_cool, p.T_amb});
    CHECK(min_of(next) >= floor - 1e-9);
    T = next;
  }
}

TEST_CASE("run_forward rejects invalid input") {
  const BioheatModel model(build_mesh(coarse_geometry()), TissueParams{});
  const Field ok = model.uniform(0.0), T = model.uniform(300.0);
  Field neg = ok;
  neg[3] = -1.0;
  CHECK_THROWS_AS(model.run_forward(neg, T, ok, 0.0, 10.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(model.run_forward(ok, Field{1.0}, ok, 0.0, 10.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(model.run_forward(ok, T, ok, 10.0, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(model.heat_operator(ok, 0.0), InvalidArgument);
}

TEST_CASE("restarting from a stored state reproduces the run") {
  const BioheatModel model(build_mesh(coarse_geometry()), TissueParams{});
  const Field xi = model.uniform(2e4);
  const auto full = model.run_forward(xi, model.uniform(model.params().T0), model.uniform(0.0), 0.0,
                                      80.0, 2.0);
  const auto head = model.run_forward(xi, full.T.front(), full.omega.front(), 0.0, 40.0, 2.0);
  const auto tail = model.run_forward(xi, head.T.back(), head.omega.back(), 40.0, 80.0, 2.0);
  CHECK(tail.T.back() == full.T.back());
  CHECK(tail.omega.back() == full.omega.back());
}

TEST_CASE("default therapy heats the applicator vicinity most") {
  const GeometryConfig g;
  const BioheatModel model(build_mesh(g), TissueParams{});
  const TissueParams& p = model.params();
  const auto traj = model.run_forward(model.uniform(0.0), model.uniform(p.T0), model.uniform(0.0),
                                      0.0, p.tau_end, 1.0);
  REQUIRE(traj.steps() == 1200);

  std::vector<std::size_t> near_rad, amb;
  for (std::size_t i = 0; i < model.num_nodes(); ++i) {
    const Point& x = model.mesh().nodes()[i];
    if (x.r <= g.applicator_radius + 2e-3 && std::abs(x.z) <= g.radiating_half_length) {
      near_rad.push_back(i);
    }
  }
  for (const auto& e : model.mesh().boundary_edges()) {
    if (e.tag == BoundaryTag::Amb) amb.insert(amb.end(), e.nodes.begin(), e.nodes.end());
  }
  double max_rad = 0.0, max_amb = 0.0;
  for (const Field& T : traj.T) {
    for (std::size_t i : near_rad) max_rad = std::max(max_rad, T[i]);
    for (std::size_t i : amb) max_amb = std::max(max_amb, T[i]);
  }
  CHECK(max_rad > max_amb);
  CHECK(max_rad > p.T0 + 5.0);

  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    if (laser_power(p, traj.times[k]) == 0.0) {
      CHECK(test::max_abs(traj.phi[k]) == 0.0);
    } else {
      CHECK(min_of(traj.phi[k]) >= -1e-9 * max_of(traj.phi[k]));
    }
    if (k > 0) {
      for (std::size_t i = 0; i < model.num_nodes(); ++i) {
        if (traj.omega[k][i] < traj.omega[k - 1][i]) FAIL("damage decreased");
      }
    }
  }
}

TEST_CASE("implicit Euler converges at first order in time") {
  const BioheatModel model(build_mesh(coarse_geometry()), TissueParams{});
  const TissueParams& p = model.params();
  const Field xi = model.uniform(1e4);
  auto final_T = [&](double dt) {
    return model.run_forward(xi, model.uniform(p.T0), model.uniform(0.0), 0.0, p.tau_end, dt)
        .T.back();
  };
  // Step sizes that hit the laser switching times exactly.
  const Field t1 = final_T(5.0), t2 = final_T(2.5), t3 = final_T(1.25);
  const double e1 = rel_l2_diff(model, t1, t2);
  const double e2 = rel_l2_diff(model, t2, t3);
  const double slope = std::log2(e1 / e2);
  MESSAGE("self-convergence slope " << slope);
  CHECK(slope >= 0.8);
  CHECK(slope <= 1.2);
}
