#pragma once

#include <numbers>
#include <span>
#include <vector>

#include "litt/mesh.hpp"
#include "litt/sparse.hpp"
#include "litt/tissue.hpp"

namespace litt {

/// Nodal values of a P1 field (one scalar per mesh node).
using Field = Vector;

struct ModelOptions {
  /// When false the damage field stays at its initial value and the optics
  /// never change (the "frozen damage" model).
  bool couple_damage = true;
  SolverOptions linear{1e-12, 0};
};

/// Dense time history of the coupled state on a uniform grid.
/// phi[k] is the radiative energy used in the step that ends at times[k];
/// phi[0] is evaluated from the initial damage for completeness.
struct StateTrajectory {
  std::vector<double> times;
  std::vector<Field> T;
  std::vector<Field> phi;
  std::vector<Field> omega;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  double t_start() const { return times.front(); }
  double t_end() const { return times.back(); }
};

/// Implicit-Euler heat operator for a fixed perfusion field and time step:
///   H = rho c_p M + dt (K_kappa + B_alpha + M_xi)
struct HeatOperator {
  double dt;
  SparseMatrix matrix;
  IncompleteCholesky precond;
  /// dt * (T_b M_xi 1 + Robin load); time independent part of the right side.
  Vector fixed_load;
};

/// Pennes bio-heat + P1 radiation + Arrhenius damage on an axisymmetric mesh.
/// All operators independent of the state are assembled once at construction.
class BioheatModel {
public:
  BioheatModel(AxiMesh mesh, TissueParams params, ModelOptions options = {});

  const AxiMesh& mesh() const { return mesh_; }
  const TissueParams& params() const { return params_; }
  const ModelOptions& options() const { return options_; }
  std::size_t num_nodes() const { return mesh_.num_nodes(); }

  /// Unit-coefficient r-weighted mass matrix (the discrete L2 inner product).
  const SparseMatrix& mass() const { return mass_; }
  /// rho c_p M
  const SparseMatrix& heat_capacity() const { return heat_capacity_; }
  /// r-weighted measure of the radiating wall.
  double radiating_measure() const { return rad_measure_; }
  /// Physical area of the radiating surface, 2 pi times its r-weighted measure.
  double radiating_area() const { return 2.0 * std::numbers::pi * rad_measure_; }

  /// Nodal absorption coefficient for the given damage field.
  Field absorption(std::span<const double> omega) const;
  /// -div(D grad) + mu_a + Robin(1/2) on the ambient surface.
  SparseMatrix radiation_operator(std::span<const double> omega) const;
  /// Right side of the radiation problem for laser time t.
  Vector radiation_load(double t) const;

  Field solve_radiation(std::span<const double> omega, double t,
                        std::span<const double> guess = {}) const;

  HeatOperator heat_operator(std::span<const double> xi, double dt) const;
  Field step_bioheat(const HeatOperator& op, std::span<const double> T_prev,
                     std::span<const double> phi, std::span<const double> omega,
                     std::span<const double> guess = {}) const;
  Field step_bioheat(std::span<const double> T_prev, std::span<const double> phi,
                     std::span<const double> omega, std::span<const double> xi, double dt) const;

  Field update_damage(std::span<const double> omega_prev, std::span<const double> T_prev,
                      std::span<const double> T_next, double dt) const;

  /// March from t_start to t_end with a uniform step dt. Per step: optics
  /// from the lagged damage, radiation (skipped when the laser is off),
  /// bio-heat step, damage update. Each state depends only on the previous
  /// one, so restarting from a stored state reproduces the run exactly.
  StateTrajectory run_forward(std::span<const double> xi, std::span<const double> T_init,
                              std::span<const double> omega_init, double t_start, double t_end,
                              double dt) const;

  Field uniform(double value) const { return Field(num_nodes(), value); }

private:
  void check(std::span<const double> f, const char* what) const;

  AxiMesh mesh_;
  TissueParams params_;
  ModelOptions options_;
  SparseMatrix mass_;
  SparseMatrix heat_capacity_;
  SparseMatrix conduction_;
  SparseMatrix robin_;
  Vector robin_load_;
  SparseMatrix radiation_robin_;
  Vector radiation_source_;
  double rad_measure_ = 0.0;
};

/// Number of uniform steps of size dt in [t_start, t_end]; throws when the
/// interval is not an integer multiple of dt.
std::size_t step_count(double t_start, double t_end, double dt);

}  // namespace litt
