#pragma once

#include <span>
#include <vector>

#include "litt/forward.hpp"

namespace litt {

/// Backward-in-time adjoint history on the forward grid.
///
/// p[k], psi[k] live at times[k]. mem1[k] and mem2[k] accumulate the damage
/// memory integrals over [times[k], tau] for the absorption and diffusion
/// parts respectively. They are stored as load vectors (already integrated
/// against the nodal test functions) because they act as sources of the
/// discrete adjoint heat equation.
struct AdjointTrajectory {
  std::vector<double> times;
  std::vector<Field> p;
  std::vector<Field> psi;
  std::vector<Vector> mem1;
  std::vector<Vector> mem2;
};

/// -div(D grad psi) + mu_a psi = mu_a p, zero flux on the applicator wall,
/// Robin 1/2 on the ambient surface; optics from omega.
Field solve_adjoint_radiation(const BioheatModel& model, std::span<const double> omega,
                              std::span<const double> p);

/// Memory integrand of the panel [t_k, t_{k+1}] given the adjoint at k and
/// the radiation used by step k+1.
struct MemoryPanel {
  Vector absorption;  // int phi_i (d mu_a/d omega) phi (psi - p) r
  Vector diffusion;   // int phi_i (d D/d omega) grad(phi) . grad(psi) r
};

MemoryPanel memory_panel(const BioheatModel& model, std::span<const double> omega,
                         std::span<const double> phi_next, std::span<const double> p,
                         std::span<const double> psi);

/// Accumulators at step k from those at k+1 and the panel starting at k:
///   mem[k] = mem[k+1] + dt * panel.
/// Writes mem1[k], mem2[k] of `adjoint` (which must already hold p[k], psi[k]
/// and the accumulators of k+1). At k = N both are zero.
void accumulate_memory(const BioheatModel& model, const StateTrajectory& state,
                       AdjointTrajectory& adjoint, std::size_t k);

/// One implicit-Euler step in reversed time:
///   H p_prev = rho c_p M p_next - dt/2 R'(T_k) (mem_k + mem_{k+1}),
/// solved with MINRES and a Jacobi preconditioner.
Field step_adjoint_bioheat(const BioheatModel& model, const HeatOperator& op,
                           std::span<const double> p_next, std::span<const double> T_at_step,
                           std::span<const double> mem_at_step,
                           std::span<const double> mem_after_step);

/// Full backward march. Terminal condition p(tau) = (T(tau) - T_meas) / (rho c_p).
AdjointTrajectory run_adjoint(const BioheatModel& model, const StateTrajectory& state,
                              std::span<const double> T_meas, std::span<const double> xi);

}  // namespace litt
