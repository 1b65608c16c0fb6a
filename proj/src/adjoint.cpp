#include "litt/adjoint.hpp"

#include <string>

#include "litt/assembly.hpp"
#include "litt/errors.hpp"

namespace litt {

namespace {

void require_converged(const SolveResult& res, const char* what) {
  if (!res.report.converged) {
    throw SolverError(std::string(what) + ": linear solver did not converge (iterations " +
                      std::to_string(res.report.iterations) + ", relative residual " +
                      std::to_string(res.report.final_residual_norm) + ")");
  }
}

bool all_zero(std::span<const double> v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

}  // namespace

Field solve_adjoint_radiation(const BioheatModel& model, std::span<const double> omega,
                              std::span<const double> p) {
  if (p.size() != model.num_nodes()) throw InvalidArgument("solve_adjoint_radiation: bad p");
  if (all_zero(p)) return Field(p.size(), 0.0);
  const SparseMatrix a = model.radiation_operator(omega);
  const Vector rhs = assemble_mass(model.mesh(), model.absorption(omega)).multiply(p);
  const IncompleteCholesky pc(a);
  SolveResult res = cg_solve(a, rhs, pc, model.options().linear);
  require_converged(res, "solve_adjoint_radiation");
  return std::move(res.x);
}

MemoryPanel memory_panel(const BioheatModel& model, std::span<const double> omega,
                         std::span<const double> phi_next, std::span<const double> p,
                         std::span<const double> psi) {
  const std::size_t n = model.num_nodes();
  MemoryPanel panel{Vector(n, 0.0), Vector(n, 0.0)};
  if (all_zero(phi_next)) return panel;
  Vector psi_minus_p(psi.begin(), psi.end());
  axpy(-1.0, p, psi_minus_p);
  panel.absorption = mass_sensitivity(model.mesh(), psi_minus_p, phi_next);
  panel.diffusion = stiffness_sensitivity(model.mesh(), phi_next, psi);
  for (std::size_t i = 0; i < n; ++i) {
    const OpticalDerivative d = d_optics_d_omega(model.params(), omega[i]);
    panel.absorption[i] *= d.dmu_a;
    panel.diffusion[i] *= d.dD;
  }
  return panel;
}

void accumulate_memory(const BioheatModel& model, const StateTrajectory& state,
                       AdjointTrajectory& adjoint, std::size_t k) {
  const std::size_t n_steps = state.steps();
  const std::size_t n = model.num_nodes();
  if (k > n_steps) throw InvalidArgument("accumulate_memory: step index out of range");
  if (k == n_steps || !model.options().couple_damage) {
    adjoint.mem1[k] = Vector(n, 0.0);
    adjoint.mem2[k] = Vector(n, 0.0);
    return;
  }
  const double dt = state.times[k + 1] - state.times[k];
  const MemoryPanel panel =
      memory_panel(model, state.omega[k], state.phi[k + 1], adjoint.p[k], adjoint.psi[k]);
  adjoint.mem1[k] = adjoint.mem1[k + 1];
  adjoint.mem2[k] = adjoint.mem2[k + 1];
  axpy(dt, panel.absorption, adjoint.mem1[k]);
  axpy(dt, panel.diffusion, adjoint.mem2[k]);
}

Field step_adjoint_bioheat(const BioheatModel& model, const HeatOperator& op,
                           std::span<const double> p_next, std::span<const double> T_at_step,
                           std::span<const double> mem_at_step,
                           std::span<const double> mem_after_step) {
  const std::size_t n = model.num_nodes();
  if (p_next.size() != n || T_at_step.size() != n || mem_at_step.size() != n ||
      mem_after_step.size() != n) {
    throw InvalidArgument("step_adjoint_bioheat: field length mismatch");
  }
  Vector rhs = model.heat_capacity().multiply(p_next);
  for (std::size_t i = 0; i < n; ++i) {
    const double mem = mem_at_step[i] + mem_after_step[i];
    if (mem != 0.0) {
      rhs[i] -= 0.5 * op.dt * arrhenius_rate_derivative(model.params(), T_at_step[i]) * mem;
    }
  }
  const JacobiPreconditioner pc = jacobi(op.matrix);
  SolveResult res = minres_solve(op.matrix, rhs, pc, model.options().linear, p_next);
  require_converged(res, "step_adjoint_bioheat");
  return std::move(res.x);
}

AdjointTrajectory run_adjoint(const BioheatModel& model, const StateTrajectory& state,
                              std::span<const double> T_meas, std::span<const double> xi) {
  const std::size_t n = model.num_nodes();
  const std::size_t n_steps = state.steps();
  if (n_steps == 0) throw InvalidArgument("run_adjoint: empty state trajectory");
  if (T_meas.size() != n) throw InvalidArgument("run_adjoint: measurement length mismatch");

  AdjointTrajectory adj;
  adj.times = state.times;
  adj.p.assign(n_steps + 1, Field{});
  adj.psi.assign(n_steps + 1, Field{});
  adj.mem1.assign(n_steps + 1, Vector{});
  adj.mem2.assign(n_steps + 1, Vector{});

  const HeatOperator op = model.heat_operator(xi, state.dt());
  const double inv_rho_cp = 1.0 / model.params().rho_cp();
  Field terminal(n);
  for (std::size_t i = 0; i < n; ++i) terminal[i] = (state.T[n_steps][i] - T_meas[i]) * inv_rho_cp;
  adj.p[n_steps] = std::move(terminal);

  const Vector zeros(n, 0.0);
  for (std::size_t k = n_steps + 1; k-- > 0;) {
    adj.psi[k] = solve_adjoint_radiation(model, state.omega[k], adj.p[k]);
    accumulate_memory(model, state, adj, k);
    if (k == 0) break;
    Vector mem_k = adj.mem1[k];
    axpy(1.0, adj.mem2[k], mem_k);
    Vector mem_k1 = zeros;
    if (k < n_steps) {
      mem_k1 = adj.mem1[k + 1];
      axpy(1.0, adj.mem2[k + 1], mem_k1);
    }
    adj.p[k - 1] = step_adjoint_bioheat(model, op, adj.p[k], state.T[k], mem_k, mem_k1);
  }
  return adj;
}

}  // namespace litt
