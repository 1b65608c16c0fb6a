#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "litt/assembly.hpp"
#include "litt/errors.hpp"
#include "litt/identification.hpp"
#include "litt/optimizer.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace litt;
using doctest::Approx;

namespace {

AxiMesh coarse_mesh() {
  GeometryConfig g;
  g.target_edge_size = 2.5e-3;
  return build_mesh(g);
}

struct Twin {
  BioheatModel model;
  Field xi_true;
  Field T_meas;
};

Twin make_twin(ModelOptions options = {}) {
  const GeometryConfig g;
  BioheatModel model(coarse_mesh(), TissueParams{}, options);
  const auto vessels = default_vessels(g, 6e4, 2e-3);
  Field xi_true = synthesize_perfusion(vessels, model.mesh());
  const auto state = model.run_forward(xi_true, model.uniform(model.params().T0),
                                       model.uniform(0.0), 0.0, 60.0, 2.0);
  Field T_meas = state.T.back();
  return {std::move(model), std::move(xi_true), std::move(T_meas)};
}

ReducedProblem problem_for(const Twin& twin, double lambda = 0.0) {
  const BioheatModel& m = twin.model;
  return ReducedProblem(m, {m.uniform(m.params().T0), m.uniform(0.0)}, 0.0, 60.0, 2.0, twin.T_meas,
                        lambda);
}

}  // namespace

TEST_CASE("cost functional") {
  const BioheatModel model(coarse_mesh(), TissueParams{});
  const Field T = model.uniform(300.0);
  const Field zero = model.uniform(0.0);
  CHECK(evaluate_cost(model, T, T, zero, 1.0).total == 0.0);

  const double volume = weighted_dot(model.uniform(1.0), model.uniform(1.0), model.mass());
  const CostBreakdown shifted = evaluate_cost(model, model.uniform(301.0), T, zero, 0.0);
  CHECK(shifted.misfit == Approx(0.5 * volume).epsilon(1e-12));
  CHECK(shifted.tikhonov == 0.0);

  const CostBreakdown one = evaluate_cost(model, T, T, model.uniform(1e3), 2.5e-10);
  const CostBreakdown two = evaluate_cost(model, T, T, model.uniform(2e3), 2.5e-10);
  CHECK(two.tikhonov == Approx(4.0 * one.tikhonov).epsilon(1e-13));
  CHECK(one.tikhonov == Approx(0.5 * 2.5e-10 * 1e6 * volume).epsilon(1e-12));
  CHECK(evaluate_cost(model, T, T, model.uniform(1e3), 0.0).tikhonov == 0.0);
  CHECK(two.total == two.misfit + two.tikhonov);
}

TEST_CASE("reduced gradient special cases") {
  const BioheatModel model(coarse_mesh(), TissueParams{});
  const std::size_t n = model.num_nodes();
  std::mt19937_64 rng(41);
  StateTrajectory state;
  AdjointTrajectory adj;
  for (int k = 0; k <= 4; ++k) {
    state.times.push_back(2.0 * k);
    state.T.push_back(test::random_vector(n, rng, 300.0, 320.0));
    state.phi.push_back(model.uniform(0.0));
    state.omega.push_back(model.uniform(0.0));
    adj.p.push_back(model.uniform(0.0));
  }
  const Field xi = test::random_vector(n, rng, 0.0, 6e4);

  SUBCASE("zero adjoint and no regularization") {
    CHECK(test::max_abs(reduced_gradient(model, state, adj, 0.0, xi)) <= 1e-30);
  }
  SUBCASE("blood temperature everywhere leaves the regularization term") {
    for (auto& T : state.T) T = model.uniform(model.params().T_b);
    for (auto& p : adj.p) p = test::random_vector(n, rng);
    const Field g = reduced_gradient(model, state, adj, 2.5e-10, xi);
    for (std::size_t i = 0; i < n; ++i) CHECK(g[i] == Approx(2.5e-10 * xi[i]).epsilon(1e-8));
  }
  SUBCASE("grid mismatch") {
    adj.p.pop_back();
    CHECK_THROWS_AS(reduced_gradient(model, state, adj, 0.0, xi), InvalidArgument);
  }
}

TEST_CASE("adjoint gradient matches finite differences") {
  std::mt19937_64 rng(42);
  const std::vector<double> eps{1e-2, 1e-3, 1e-4, 1e-5};
  for (bool coupled : {true, false}) {
    CAPTURE(coupled);
    ModelOptions opts;
    opts.couple_damage = coupled;
    const Twin twin = make_twin(opts);
    const ReducedProblem problem = problem_for(twin, 2.5e-10);
    const std::size_t n = twin.model.num_nodes();
    Field xi = twin.xi_true;
    for (double& v : xi) v = 0.5 * v + 1e4;
    const auto eval = problem.evaluate(xi);
    const Field g = problem.gradient(xi, eval.state);
    const Field h = test::random_vector(n, rng, -1e4, 1e4);
    const double err = test::fd_min_relative_error(problem, xi, g, h, eps);
    MESSAGE("min relative FD error " << err);
    CHECK(err <= (coupled ? 1e-2 : 1e-3));
  }
}

TEST_CASE("projection") {
  CHECK(project(Vector{1.0, 2.0}) == Vector{1.0, 2.0});
  CHECK(project(Vector{-1.0, -2.0}) == Vector{0.0, 0.0});
  const Vector mixed{-1.0, 0.5, 0.0, -0.0};
  CHECK(project(project(mixed)) == project(mixed));
}

TEST_CASE("stationarity measure") {
  const AxiMesh rect = test::rectangle_mesh(1e-3, 2e-3, 0.0, 1e-3, 1, 1);
  const SparseMatrix m = assemble_mass(rect, 1.0);
  const Vector zero(4, 0.0);
  CHECK(stationarity(Vector{1, 2, 3, 4}, zero, m) == 0.0);
  CHECK(stationarity(zero, Vector{1, 0.5, 0, 2}, m) == 0.0);
  CHECK(stationarity(zero, Vector(4, -1.0), m) == Approx(std::sqrt(1.5e-9)).epsilon(1e-12));
  CHECK(stationarity(zero, Vector(4, -1.0), m) == Approx(3.873e-5).epsilon(1e-4));
  CHECK_THROWS_AS(stationarity(zero, Vector{1.0}, m), InvalidArgument);

  std::mt19937_64 rng(43);
  const AxiMesh small = test::rectangle_mesh(0.0, 2e-3, 0.0, 2e-3, 2, 2);
  CHECK(test::kkt_enumeration_mismatches(assemble_mass(small, 1.0), rng) == 0);
}

TEST_CASE("two-loop recursion") {
  const SparseMatrix one = SparseMatrix::identity(1);
  LbfgsHistory history(5);
  CHECK(lbfgs_direction(Vector{2.0}, history, one) == Vector{-2.0});
  REQUIRE(update_history(history, Vector{1.0}, Vector{1.0}, one));
  CHECK(lbfgs_direction(Vector{2.0}, history, one)[0] == Approx(-2.0).epsilon(1e-15));

  std::mt19937_64 rng(44);
  for (std::size_t n : {2u, 5u, 10u}) {
    CAPTURE(n);
    CHECK(test::bfgs_two_loop_deviation(n, rng) <= 1e-12);
  }
}

TEST_CASE("history updates") {
  const SparseMatrix m = SparseMatrix::identity(2);
  LbfgsHistory history(5);
  CHECK(update_history(history, Vector{1, 0}, Vector{2, 0}, m));
  CHECK(history.pairs.size() == 1);
  CHECK(history.pairs.front().rho == Approx(0.5));
  CHECK_FALSE(update_history(history, Vector{1, 0}, Vector{-1, 0}, m));
  CHECK(history.pairs.empty());
  CHECK_FALSE(update_history(history, Vector{1, 0}, Vector{0, 1}, m));

  for (int i = 1; i <= 6; ++i) {
    CHECK(update_history(history, Vector{double(i), 0}, Vector{1, 0}, m));
  }
  CHECK(history.pairs.size() == 5);
  CHECK(history.pairs.front().s[0] == 2.0);
  CHECK(history.pairs.back().s[0] == 6.0);

  LbfgsHistory none(0);
  CHECK_FALSE(update_history(none, Vector{1, 0}, Vector{1, 0}, m));
  CHECK(none.pairs.empty());
}

TEST_CASE("armijo backtracking") {
  const SparseMatrix one = SparseMatrix::identity(1);
  const ArmijoOptions opts;

  SUBCASE("quadratic accepts the full step") {
    auto f = [](std::span<const double> x) { return 0.5 * (x[0] - 2.0) * (x[0] - 2.0); };
    const auto res = armijo_search(Vector{0.0}, Vector{2.0}, Vector{-2.0}, 2.0, f, one, opts);
    CHECK(res.step == 1.0);
    CHECK(res.reductions == 0);
    CHECK(res.xi[0] == 2.0);
    CHECK(res.cost == 0.0);
  }
  SUBCASE("outward direction at the bound does not move") {
    int calls = 0;
    auto f = [&](std::span<const double> x) {
      ++calls;
      return 1.0 + x[0];
    };
    const auto res = armijo_search(Vector{0.0}, Vector{-1.0}, Vector{1.0}, 1.0, f, one, opts);
    CHECK(calls == 1);
    CHECK(res.reductions == 0);
    CHECK(res.xi[0] == 0.0);
    CHECK(res.cost == 1.0);
  }
  SUBCASE("each rejection halves the step") {
    std::vector<double> trials;
    auto f = [&](std::span<const double> x) {
      trials.push_back(x[0]);
      return x[0] <= 0.3 ? -x[0] : 10.0;
    };
    const auto res = armijo_search(Vector{0.0}, Vector{1.0}, Vector{-1.0}, 0.0, f, one, opts);
    CHECK(trials == std::vector<double>{1.0, 0.5, 0.25});
    CHECK(res.reductions == 2);
    CHECK(res.step == 0.25);
  }
  SUBCASE("failure after the trial budget") {
    int calls = 0;
    auto f = [&](std::span<const double>) {
      ++calls;
      return 5.0;
    };
    try {
      armijo_search(Vector{1.0}, Vector{1.0}, Vector{-1.0}, 1.0, f, one, opts);
      FAIL("expected a line-search failure");
    } catch (const LineSearchError& e) {
      CHECK(e.trials == 30);
      CHECK(calls == 30);
      CHECK(e.last_trial_cost == 5.0);
    }
  }
  SUBCASE("length mismatch") {
    auto f = [](std::span<const double>) { return 0.0; };
    CHECK_THROWS_AS(armijo_search(Vector{0.0}, Vector{1.0, 2.0}, Vector{0.0}, 0.0, f, one, opts),
                    InvalidArgument);
  }
}

TEST_CASE("reduced problem validation") {
  const BioheatModel model(coarse_mesh(), TissueParams{});
  const Field T = model.uniform(300.0), w = model.uniform(0.0);
  CHECK_THROWS_AS(ReducedProblem(model, {T, w}, 0.0, 60.0, 7.0, T, 0.0), InvalidArgument);
  CHECK_THROWS_AS(ReducedProblem(model, {T, w}, 0.0, 60.0, 2.0, T, -1.0), InvalidArgument);
  CHECK_THROWS_AS(ReducedProblem(model, {Field{1.0}, w}, 0.0, 60.0, 2.0, T, 0.0), InvalidArgument);
}

TEST_CASE("identify") {
  SUBCASE("zero residual stops at the initial guess") {
    const BioheatModel model(coarse_mesh(), TissueParams{});
    const Field zero = model.uniform(0.0);
    const auto state = model.run_forward(zero, model.uniform(model.params().T0), zero, 0.0, 60.0, 2.0);
    const ReducedProblem problem(model, {model.uniform(model.params().T0), zero}, 0.0, 60.0, 2.0,
                                 state.T.back(), 0.0);
    const auto res = identify(problem, zero, OptimizerConfig{});
    CHECK(res.status == IdentifyStatus::Converged);
    CHECK(res.history.size() == 1);
    CHECK(res.history[0].stationarity == 0.0);
    CHECK(res.xi == zero);
  }

  SUBCASE("first iterate is a gradient step for every memory") {
    const Twin twin = make_twin();
    const ReducedProblem problem = problem_for(twin);
    const Field xi0 = twin.model.uniform(0.0);
    OptimizerConfig one_step;
    one_step.max_iter = 1;
    one_step.memory = 0;
    const auto gd = identify(problem, xi0, one_step);
    one_step.memory = 5;
    const auto qn = identify(problem, xi0, one_step);
    CHECK(gd.xi == qn.xi);
    CHECK(gd.history.size() == 2);
  }

  SUBCASE("L-BFGS run decreases the cost and stays admissible") {
    const Twin twin = make_twin();
    const ReducedProblem problem = problem_for(twin);
    OptimizerConfig cfg;
    cfg.max_iter = 8;
    const auto res = identify(problem, twin.model.uniform(0.0), cfg);
    REQUIRE(res.history.size() >= 2);
    for (std::size_t k = 1; k < res.history.size(); ++k) {
      CHECK(res.history[k].cost.total < res.history[k - 1].cost.total);
    }
    for (double v : res.xi) CHECK(v >= 0.0);
    CHECK(res.history.back().cost.total < 0.05 * res.history.front().cost.total);
    CHECK(res.state.T.back() == problem.evaluate(res.xi).state.T.back());

    std::ostringstream csv;
    write_history_csv(csv, res.history);
    std::istringstream lines(csv.str());
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    CHECK(header == "k,misfit,tikhonov,total,stationarity_ratio,step,trials");
    CHECK(first.rfind("0,", 0) == 0);
  }
}

TEST_CASE("status names") {
  CHECK(std::string(to_string(IdentifyStatus::Converged)) == "converged");
  CHECK(std::string(to_string(IdentifyStatus::MaxIterations)) == "max_iterations");
  CHECK(std::string(to_string(IdentifyStatus::LineSearchFailed)) == "line_search_failed");
}
