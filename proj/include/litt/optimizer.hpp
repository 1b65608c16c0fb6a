#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "litt/adjoint.hpp"
#include "litt/forward.hpp"

namespace litt {

struct CostBreakdown {
  double misfit = 0.0;    // 1/2 ||T(tau) - T_meas||^2
  double tikhonov = 0.0;  // lambda/2 ||xi||^2
  double total = 0.0;
};

/// Initial state of one identification interval.
struct InitialState {
  Field T;
  Field omega;
};

/// Reduced cost xi -> J(T[xi], xi) for one measurement at the end of
/// [t_start, t_end], together with its adjoint gradient.
class ReducedProblem {
public:
  ReducedProblem(const BioheatModel& model, InitialState init, double t_start, double t_end,
                 double dt, Field T_meas, double lambda);

  struct Evaluation {
    CostBreakdown cost;
    StateTrajectory state;
  };

  Evaluation evaluate(std::span<const double> xi) const;
  /// L2-Riesz gradient at xi; `state` must be the forward run for xi.
  Field gradient(std::span<const double> xi, const StateTrajectory& state) const;

  const BioheatModel& model() const { return *model_; }
  const SparseMatrix& mass() const { return model_->mass(); }
  double lambda() const { return lambda_; }
  const Field& measurement() const { return T_meas_; }
  const InitialState& initial_state() const { return init_; }
  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  double dt() const { return dt_; }

private:
  const BioheatModel* model_;
  InitialState init_;
  double t_start_;
  double t_end_;
  double dt_;
  Field T_meas_;
  double lambda_;
};

CostBreakdown evaluate_cost(const BioheatModel& model, std::span<const double> T_final,
                            std::span<const double> T_meas, std::span<const double> xi,
                            double lambda);

/// lambda xi + time quadrature of (T_b - T) p, returned as the Riesz
/// representative in the r-weighted L2 inner product.
Field reduced_gradient(const BioheatModel& model, const StateTrajectory& state,
                       const AdjointTrajectory& adjoint, double lambda,
                       std::span<const double> xi);

/// Nodal clamp onto the nonnegative cone.
Field project(std::span<const double> xi);

/// || xi - P(xi - g) ||_M
double stationarity(std::span<const double> xi, std::span<const double> g, const SparseMatrix& m);

struct LbfgsHistory {
  explicit LbfgsHistory(std::size_t memory) : memory(memory) {}

  struct Pair {
    Field s;
    Field y;
    double rho;  // 1 / (s, y)_M
  };

  std::size_t memory;
  std::deque<Pair> pairs;  // oldest first
};

/// Two-loop recursion with M-weighted inner products; H0 scaled by
/// (s, y)_M / (y, y)_M of the newest pair. Empty history gives -g.
Field lbfgs_direction(std::span<const double> g, const LbfgsHistory& history,
                      const SparseMatrix& m);

/// Appends (s, y) when (s, y)_M > eps_curv (s, s)_M (evicting the oldest
/// beyond the memory), otherwise clears the history. Returns true when the
/// pair was stored.
bool update_history(LbfgsHistory& history, std::span<const double> s, std::span<const double> y,
                    const SparseMatrix& m, double eps_curv = 1e-10);

struct ArmijoOptions {
  double initial_step = 1.0;
  double beta = 0.5;
  double c = 1e-4;
  int max_trials = 30;
};

struct ArmijoResult {
  double step;
  Field xi;
  double cost;
  /// Number of step reductions before acceptance (m_k).
  int reductions;
};

/// Backtracking along the projected path P(xi + alpha d). Accepts the first
/// trial with J(trial) <= J(xi) + c (g, trial - xi)_M that does not increase
/// the cost. Throws LineSearchError after max_trials rejections.
ArmijoResult armijo_search(std::span<const double> xi, std::span<const double> d,
                           std::span<const double> g, double cost,
                           const std::function<double(std::span<const double>)>& cost_fn,
                           const SparseMatrix& m, const ArmijoOptions& opts);

struct OptimizerConfig {
  double tol = 1e-3;
  int max_iter = 20;
  /// L-BFGS memory; 0 is projected gradient descent.
  std::size_t memory = 5;
  double beta = 0.5;
  double c = 1e-4;
  int max_trials = 30;
  double eps_curv = 1e-10;
};

struct IterationRecord {
  int k = 0;
  CostBreakdown cost;
  double stationarity = 0.0;
  double step = 0.0;
  int trials = 0;
};

enum class IdentifyStatus { Converged, MaxIterations, LineSearchFailed };

const char* to_string(IdentifyStatus status);

struct IdentifyResult {
  Field xi;
  std::vector<IterationRecord> history;
  IdentifyStatus status = IdentifyStatus::MaxIterations;
  /// Forward trajectory for the returned xi.
  StateTrajectory state;
};

/// Projected gradient / projected L-BFGS iteration with Armijo steps,
/// stopped when stationarity drops below tol times its initial value.
IdentifyResult identify(const ReducedProblem& problem, std::span<const double> xi0,
                        const OptimizerConfig& config);

/// k,misfit,tikhonov,total,stationarity_ratio,step,trials
void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history);

}  // namespace litt
