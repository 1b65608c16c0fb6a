#include "litt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "litt/assembly.hpp"
#include "litt/errors.hpp"

namespace litt {

ReducedProblem::ReducedProblem(const BioheatModel& model, InitialState init, double t_start,
                               double t_end, double dt, Field T_meas, double lambda)
    : model_(&model),
      init_(std::move(init)),
      t_start_(t_start),
      t_end_(t_end),
      dt_(dt),
      T_meas_(std::move(T_meas)),
      lambda_(lambda) {
  const std::size_t n = model.num_nodes();
  if (init_.T.size() != n || init_.omega.size() != n || T_meas_.size() != n) {
    throw InvalidArgument("ReducedProblem: field length mismatch");
  }
  if (lambda < 0.0) throw InvalidArgument("ReducedProblem: lambda must be nonnegative");
  step_count(t_start, t_end, dt);
}

ReducedProblem::Evaluation ReducedProblem::evaluate(std::span<const double> xi) const {
  Evaluation ev;
  ev.state = model_->run_forward(xi, init_.T, init_.omega, t_start_, t_end_, dt_);
  ev.cost = evaluate_cost(*model_, ev.state.T.back(), T_meas_, xi, lambda_);
  return ev;
}

Field ReducedProblem::gradient(std::span<const double> xi, const StateTrajectory& state) const {
  const AdjointTrajectory adj = run_adjoint(*model_, state, T_meas_, xi);
  return reduced_gradient(*model_, state, adj, lambda_, xi);
}

CostBreakdown evaluate_cost(const BioheatModel& model, std::span<const double> T_final,
                            std::span<const double> T_meas, std::span<const double> xi,
                            double lambda) {
  Vector diff(T_final.begin(), T_final.end());
  axpy(-1.0, T_meas, diff);
  CostBreakdown c;
  c.misfit = 0.5 * weighted_dot(diff, diff, model.mass());
  c.tikhonov = lambda == 0.0 ? 0.0 : 0.5 * lambda * weighted_dot(xi, xi, model.mass());
  c.total = c.misfit + c.tikhonov;
  return c;
}

Field reduced_gradient(const BioheatModel& model, const StateTrajectory& state,
                       const AdjointTrajectory& adjoint, double lambda,
                       std::span<const double> xi) {
  const std::size_t n = model.num_nodes();
  if (adjoint.p.size() != state.T.size()) {
    throw InvalidArgument("reduced_gradient: state and adjoint grids differ");
  }
  // Load vector of the derivative; converted to the Riesz representative at the end.
  Vector dual = model.mass().multiply(xi);
  for (double& v : dual) v *= lambda;
  const double T_b = model.params().T_b;
  Vector cooling(n);
  for (std::size_t k = 1; k < state.T.size(); ++k) {
    const double dt = state.times[k] - state.times[k - 1];
    for (std::size_t i = 0; i < n; ++i) cooling[i] = T_b - state.T[k][i];
    axpy(dt, mass_sensitivity(model.mesh(), adjoint.p[k - 1], cooling), dual);
  }
  const IncompleteCholesky pc(model.mass());
  SolveResult res = cg_solve(model.mass(), dual, pc, model.options().linear);
  if (!res.report.converged) throw SolverError("reduced_gradient: mass solve did not converge");
  return std::move(res.x);
}

Field project(std::span<const double> xi) {
  Field out(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) out[i] = std::max(xi[i], 0.0);
  return out;
}

double stationarity(std::span<const double> xi, std::span<const double> g, const SparseMatrix& m) {
  if (xi.size() != g.size()) throw InvalidArgument("stationarity: length mismatch");
  Vector r(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) r[i] = xi[i] - std::max(xi[i] - g[i], 0.0);
  return weighted_norm(r, m);
}

Field lbfgs_direction(std::span<const double> g, const LbfgsHistory& history,
                      const SparseMatrix& m) {
  Field q(g.begin(), g.end());
  const auto& pairs = history.pairs;
  std::vector<double> alpha(pairs.size());
  for (std::size_t i = pairs.size(); i-- > 0;) {
    alpha[i] = pairs[i].rho * weighted_dot(pairs[i].s, q, m);
    axpy(-alpha[i], pairs[i].y, q);
  }
  if (!pairs.empty()) {
    const auto& newest = pairs.back();
    const double gamma = weighted_dot(newest.s, newest.y, m) / weighted_dot(newest.y, newest.y, m);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double beta = pairs[i].rho * weighted_dot(pairs[i].y, q, m);
    axpy(alpha[i] - beta, pairs[i].s, q);
  }
  for (double& v : q) v = -v;
  return q;
}

bool update_history(LbfgsHistory& history, std::span<const double> s, std::span<const double> y,
                    const SparseMatrix& m, double eps_curv) {
  const double sy = weighted_dot(s, y, m);
  const double ss = weighted_dot(s, s, m);
  if (!(sy > eps_curv * ss) || ss == 0.0) {
    history.pairs.clear();
    return false;
  }
  if (history.memory == 0) return false;
  history.pairs.push_back({Field(s.begin(), s.end()), Field(y.begin(), y.end()), 1.0 / sy});
  while (history.pairs.size() > history.memory) history.pairs.pop_front();
  return true;
}

ArmijoResult armijo_search(std::span<const double> xi, std::span<const double> d,
                           std::span<const double> g, double cost,
                           const std::function<double(std::span<const double>)>& cost_fn,
                           const SparseMatrix& m, const ArmijoOptions& opts) {
  if (xi.size() != d.size() || xi.size() != g.size()) {
    throw InvalidArgument("armijo_search: length mismatch");
  }
  double step = opts.initial_step;
  double last_cost = cost;
  Vector trial(xi.size()), delta(xi.size());
  for (int m_k = 0; m_k < opts.max_trials; ++m_k) {
    for (std::size_t i = 0; i < xi.size(); ++i) {
      trial[i] = std::max(xi[i] + step * d[i], 0.0);
      delta[i] = trial[i] - xi[i];
    }
    last_cost = cost_fn(trial);
    const double predicted = weighted_dot(g, delta, m);
    if (last_cost <= cost + opts.c * predicted && last_cost <= cost) {
      return {step, trial, last_cost, m_k};
    }
    step *= opts.beta;
  }
  throw LineSearchError("Armijo line search failed after " + std::to_string(opts.max_trials) +
                            " trials",
                        opts.max_trials, step / opts.beta, cost, last_cost);
}

const char* to_string(IdentifyStatus status) {
  switch (status) {
    case IdentifyStatus::Converged: return "converged";
    case IdentifyStatus::MaxIterations: return "max_iterations";
    case IdentifyStatus::LineSearchFailed: return "line_search_failed";
  }
  return "?";
}

IdentifyResult identify(const ReducedProblem& problem, std::span<const double> xi0,
                        const OptimizerConfig& config) {
  const SparseMatrix& m = problem.mass();
  IdentifyResult out;
  Field xi = project(xi0);
  ReducedProblem::Evaluation eval = problem.evaluate(xi);
  Field g = problem.gradient(xi, eval.state);
  double sigma = stationarity(xi, g, m);
  const double sigma0 = sigma;
  out.history.push_back({0, eval.cost, sigma, 0.0, 0});

  LbfgsHistory history(config.memory);
  double gradient_step = 0.0;
  out.status = IdentifyStatus::MaxIterations;

  for (int k = 0;; ++k) {
    if (sigma <= config.tol * sigma0) {
      out.status = IdentifyStatus::Converged;
      break;
    }
    if (k >= config.max_iter) break;

    // Nodes pinned at the bound with the gradient pushing outward take a
    // plain gradient component; the quasi-Newton model acts on the rest.
    std::vector<bool> active(xi.size());
    Field g_free = g;
    for (std::size_t i = 0; i < xi.size(); ++i) {
      active[i] = xi[i] <= 0.0 && g[i] > 0.0;
      if (active[i]) g_free[i] = 0.0;
    }
    bool quasi_newton = config.memory > 0 && !history.pairs.empty();
    Field d;
    if (quasi_newton) {
      d = lbfgs_direction(g_free, history, m);
      for (std::size_t i = 0; i < xi.size(); ++i) {
        if (active[i]) d[i] = -g[i];
      }
      if (!(weighted_dot(g, d, m) < 0.0)) {
        history.pairs.clear();
        quasi_newton = false;
      }
    }
    if (!quasi_newton) {
      d = g;
      for (double& v : d) v = -v;
    }

    ReducedProblem::Evaluation trial_eval;
    auto cost_fn = [&](std::span<const double> x) {
      trial_eval = problem.evaluate(x);
      return trial_eval.cost.total;
    };
    ArmijoOptions opts{1.0, config.beta, config.c, config.max_trials};
    auto gradient_initial = [&] {
      return gradient_step > 0.0 ? gradient_step : 1.0 / weighted_norm(g, m);
    };
    if (!quasi_newton) opts.initial_step = gradient_initial();

    ArmijoResult ls{};
    try {
      ls = armijo_search(xi, d, g, eval.cost.total, cost_fn, m, opts);
    } catch (const LineSearchError&) {
      if (!quasi_newton) {
        out.status = IdentifyStatus::LineSearchFailed;
        break;
      }
      history.pairs.clear();
      quasi_newton = false;
      d = g;
      for (double& v : d) v = -v;
      opts.initial_step = gradient_initial();
      try {
        ls = armijo_search(xi, d, g, eval.cost.total, cost_fn, m, opts);
      } catch (const LineSearchError&) {
        out.status = IdentifyStatus::LineSearchFailed;
        break;
      }
    }
    if (!quasi_newton) gradient_step = ls.step;

    // The accepted trial was the last one evaluated.
    Field g_new = problem.gradient(ls.xi, trial_eval.state);
    Field s = ls.xi;
    axpy(-1.0, xi, s);
    Field y = g_new;
    axpy(-1.0, g, y);
    update_history(history, s, y, m, config.eps_curv);

    xi = std::move(ls.xi);
    eval = std::move(trial_eval);
    g = std::move(g_new);
    sigma = stationarity(xi, g, m);
    out.history.push_back({k + 1, eval.cost, sigma, ls.step, ls.reductions});
  }
  out.xi = std::move(xi);
  out.state = std::move(eval.state);
  return out;
}

void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history) {
  os << "k,misfit,tikhonov,total,stationarity_ratio,step,trials\n";
  const double sigma0 = history.empty() ? 0.0 : history.front().stationarity;
  os.precision(12);
  for (const auto& rec : history) {
    const double ratio = sigma0 > 0.0 ? rec.stationarity / sigma0 : 0.0;
    os << rec.k << ',' << rec.cost.misfit << ',' << rec.cost.tikhonov << ',' << rec.cost.total
       << ',' << ratio << ',' << rec.step << ',' << rec.trials << '\n';
  }
}

}  // namespace litt
