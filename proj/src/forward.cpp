#include "litt/forward.hpp"

#include <cmath>
#include <string>

#include "litt/assembly.hpp"
#include "litt/errors.hpp"

namespace litt {

namespace {

// Boundary forms restricted to the tags the mesh actually carries, so small
// test meshes without an applicator still yield a consistent model.
SparseMatrix boundary_mass_present(const AxiMesh& mesh, BoundaryTag tag, double coeff) {
  if (!mesh.has_tag(tag) || coeff == 0.0) return mesh.pattern().zeros_like();
  return assemble_boundary_mass(mesh, {tag}, coeff);
}

Vector boundary_load_present(const AxiMesh& mesh, BoundaryTag tag, double value) {
  if (!mesh.has_tag(tag) || value == 0.0) return Vector(mesh.num_nodes(), 0.0);
  return assemble_boundary_load(mesh, {tag}, value);
}

void require_converged(const SolveResult& res, const char* what) {
  if (!res.report.converged) {
    throw SolverError(std::string(what) + ": linear solver did not converge (iterations " +
                      std::to_string(res.report.iterations) + ", relative residual " +
                      std::to_string(res.report.final_residual_norm) + ")");
  }
}

}  // namespace

std::size_t step_count(double t_start, double t_end, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (!(t_end > t_start)) throw InvalidArgument("need t_start < t_end");
  const double ratio = (t_end - t_start) / dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
    throw InvalidArgument("time interval is not an integer multiple of dt");
  }
  return static_cast<std::size_t>(n);
}

BioheatModel::BioheatModel(AxiMesh mesh, TissueParams params, ModelOptions options)
    : mesh_(std::move(mesh)), params_(params), options_(options) {
  params_.validate();
  mass_ = assemble_mass(mesh_, 1.0);
  heat_capacity_ = mass_;
  heat_capacity_.scale(params_.rho_cp());
  conduction_ = assemble_stiffness(mesh_, params_.kappa);

  robin_ = boundary_mass_present(mesh_, BoundaryTag::Rad, params_.alpha_cool);
  robin_.add_scaled(1.0, boundary_mass_present(mesh_, BoundaryTag::Cool, params_.alpha_cool));
  robin_.add_scaled(1.0, boundary_mass_present(mesh_, BoundaryTag::Amb, params_.alpha_amb));
  robin_load_ = boundary_load_present(mesh_, BoundaryTag::Rad, params_.alpha_cool * params_.T_cool);
  axpy(1.0, boundary_load_present(mesh_, BoundaryTag::Cool, params_.alpha_cool * params_.T_cool),
       robin_load_);
  axpy(1.0, boundary_load_present(mesh_, BoundaryTag::Amb, params_.alpha_amb * params_.T_amb),
       robin_load_);

  radiation_robin_ = boundary_mass_present(mesh_, BoundaryTag::Amb, 0.5);
  if (mesh_.has_tag(BoundaryTag::Rad)) {
    rad_measure_ = boundary_measure(mesh_, {BoundaryTag::Rad});
    // The applied power spreads over the physical surface of revolution.
    radiation_source_ =
        assemble_boundary_load(mesh_, {BoundaryTag::Rad}, 1.0 / radiating_area());
  } else {
    radiation_source_ = Vector(mesh_.num_nodes(), 0.0);
  }
}

void BioheatModel::check(std::span<const double> f, const char* what) const {
  if (f.size() != mesh_.num_nodes()) {
    throw InvalidArgument(std::string(what) + ": field length does not match node count");
  }
}

Field BioheatModel::absorption(std::span<const double> omega) const {
  check(omega, "absorption");
  Field mu(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) mu[i] = blended_optics(params_, omega[i]).mu_a;
  return mu;
}

SparseMatrix BioheatModel::radiation_operator(std::span<const double> omega) const {
  check(omega, "radiation_operator");
  Field mu(omega.size()), diff(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const OpticalState s = blended_optics(params_, omega[i]);
    mu[i] = s.mu_a;
    diff[i] = s.D;
  }
  SparseMatrix a = assemble_stiffness(mesh_, diff);
  a.add_scaled(1.0, assemble_mass(mesh_, mu));
  a.add_scaled(1.0, radiation_robin_);
  return a;
}

Vector BioheatModel::radiation_load(double t) const {
  Vector b = radiation_source_;
  const double q = laser_power(params_, t);
  for (double& v : b) v *= q;
  return b;
}

Field BioheatModel::solve_radiation(std::span<const double> omega, double t,
                                    std::span<const double> guess) const {
  check(omega, "solve_radiation");
  if (laser_power(params_, t) == 0.0 || rad_measure_ == 0.0) return Field(omega.size(), 0.0);
  const SparseMatrix a = radiation_operator(omega);
  const IncompleteCholesky pc(a);
  const Vector b = radiation_load(t);
  SolveResult res = cg_solve(a, b, pc, options_.linear, guess);
  require_converged(res, "solve_radiation");
  return std::move(res.x);
}

HeatOperator BioheatModel::heat_operator(std::span<const double> xi, double dt) const {
  check(xi, "heat_operator");
  if (!(dt > 0.0)) throw InvalidArgument("heat_operator: dt must be positive");
  const SparseMatrix perfusion = assemble_mass(mesh_, xi);
  SparseMatrix h = heat_capacity_;
  h.add_scaled(dt, conduction_);
  h.add_scaled(dt, robin_);
  h.add_scaled(dt, perfusion);

  Vector load = perfusion.multiply(uniform(params_.T_b));
  axpy(1.0, robin_load_, load);
  for (double& v : load) v *= dt;
  IncompleteCholesky pc(h);
  return HeatOperator{dt, std::move(h), std::move(pc), std::move(load)};
}

Field BioheatModel::step_bioheat(const HeatOperator& op, std::span<const double> T_prev,
                                 std::span<const double> phi, std::span<const double> omega,
                                 std::span<const double> guess) const {
  check(T_prev, "step_bioheat(T)");
  check(phi, "step_bioheat(phi)");
  check(omega, "step_bioheat(omega)");
  Vector rhs = heat_capacity_.multiply(T_prev);
  axpy(1.0, op.fixed_load, rhs);
  bool laser = false;
  for (double v : phi) {
    if (v != 0.0) {
      laser = true;
      break;
    }
  }
  if (laser) {
    const Vector source = assemble_mass(mesh_, absorption(omega)).multiply(phi);
    axpy(op.dt, source, rhs);
  }
  SolveResult res = cg_solve(op.matrix, rhs, op.precond, options_.linear,
                             guess.empty() ? T_prev : guess);
  require_converged(res, "step_bioheat");
  return std::move(res.x);
}

Field BioheatModel::step_bioheat(std::span<const double> T_prev, std::span<const double> phi,
                                 std::span<const double> omega, std::span<const double> xi,
                                 double dt) const {
  return step_bioheat(heat_operator(xi, dt), T_prev, phi, omega);
}

Field BioheatModel::update_damage(std::span<const double> omega_prev, std::span<const double> T_prev,
                                  std::span<const double> T_next, double dt) const {
  check(omega_prev, "update_damage(omega)");
  check(T_prev, "update_damage(T_prev)");
  check(T_next, "update_damage(T_next)");
  Field out(omega_prev.begin(), omega_prev.end());
  if (!options_.couple_damage || dt == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += 0.5 * dt * (arrhenius_rate(params_, T_prev[i]) + arrhenius_rate(params_, T_next[i]));
  }
  return out;
}

StateTrajectory BioheatModel::run_forward(std::span<const double> xi, std::span<const double> T_init,
                                          std::span<const double> omega_init, double t_start,
                                          double t_end, double dt) const {
  check(xi, "run_forward(xi)");
  check(T_init, "run_forward(T_init)");
  check(omega_init, "run_forward(omega_init)");
  for (double v : xi) {
    if (v < 0.0) throw InvalidArgument("run_forward: perfusion must be nonnegative");
  }
  const std::size_t n = step_count(t_start, t_end, dt);
  const HeatOperator op = heat_operator(xi, dt);

  StateTrajectory traj;
  traj.times.reserve(n + 1);
  traj.T.reserve(n + 1);
  traj.phi.reserve(n + 1);
  traj.omega.reserve(n + 1);
  traj.times.push_back(t_start);
  traj.T.emplace_back(T_init.begin(), T_init.end());
  traj.omega.emplace_back(omega_init.begin(), omega_init.end());
  traj.phi.push_back(solve_radiation(omega_init, t_start));

  for (std::size_t k = 1; k <= n; ++k) {
    const double t = t_start + static_cast<double>(k) * dt;
    const Field& omega_prev = traj.omega.back();
    Field phi = solve_radiation(omega_prev, t);
    Field T_next = step_bioheat(op, traj.T.back(), phi, omega_prev);
    Field omega_next = update_damage(omega_prev, traj.T.back(), T_next, dt);
    traj.times.push_back(t);
    traj.T.push_back(std::move(T_next));
    traj.phi.push_back(std::move(phi));
    traj.omega.push_back(std::move(omega_next));
  }
  return traj;
}

}  // namespace litt
