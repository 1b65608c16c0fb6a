#include "litt/identification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "litt/assembly.hpp"
#include "litt/errors.hpp"

namespace litt {

std::string_view to_string(VesselKind kind) {
  return kind == VesselKind::Gaussian ? "gaussian" : "square";
}

VesselKind vessel_kind_from_string(std::string_view name) {
  if (name == "gaussian") return VesselKind::Gaussian;
  if (name == "square") return VesselKind::Square;
  throw ConfigError("unknown vessel kind '" + std::string(name) + "'");
}

void VesselSpec::validate() const {
  if (!(extent > 0.0)) throw ConfigError("vessel extent must be positive");
  if (!(amplitude >= 0.0)) throw ConfigError("vessel amplitude must be nonnegative");
}

std::vector<VesselSpec> default_vessels(const GeometryConfig& geom, double amplitude,
                                        double extent) {
  std::vector<VesselSpec> out;
  const double a = geom.applicator_radius;
  for (double offset : {4e-3, 8e-3}) {
    for (int j = -2; j <= 2; ++j) {
      VesselSpec v;
      v.center = {a + offset, 5e-3 * j};
      v.extent = extent;
      v.amplitude = amplitude;
      if (offset == 4e-3 && j == 0) v.extent = 1.5 * extent;
      out.push_back(v);
    }
  }
  return out;
}

Field synthesize_perfusion(std::span<const VesselSpec> vessels, const AxiMesh& mesh) {
  Field xi(mesh.num_nodes(), 0.0);
  double cap = 0.0;
  for (const auto& v : vessels) {
    v.validate();
    cap = std::max(cap, v.amplitude);
  }
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const Point& p = mesh.nodes()[i];
    double sum = 0.0;
    for (const auto& v : vessels) {
      const double dr = p.r - v.center.r;
      const double dz = p.z - v.center.z;
      if (v.kind == VesselKind::Gaussian) {
        sum += v.amplitude * std::exp(-(dr * dr + dz * dz) / (2.0 * v.extent * v.extent));
      } else if (std::abs(dr) <= v.extent && std::abs(dz) <= v.extent) {
        sum += v.amplitude;
      }
    }
    xi[i] = std::min(sum, cap);
  }
  return xi;
}

void MeasurementSet::validate(std::size_t n, double tau_end) const {
  if (times.empty()) throw InvalidArgument("measurement set is empty");
  if (times.size() != fields.size()) throw InvalidArgument("measurement times/fields mismatch");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > (i == 0 ? 0.0 : times[i - 1]))) {
      throw InvalidArgument("measurement times must increase strictly and be positive");
    }
    if (fields[i].size() != n) throw InvalidArgument("measurement field length mismatch");
  }
  if (!(times.back() < tau_end)) throw InvalidArgument("last measurement must precede tau_end");
}

namespace {

StateTrajectory rest_run(const BioheatModel& model, std::span<const double> xi, double t_end,
                         double dt) {
  const Field T0 = model.uniform(model.params().T0);
  const Field omega0 = model.uniform(0.0);
  return model.run_forward(xi, T0, omega0, 0.0, t_end, dt);
}

std::vector<Field> snapshots(const StateTrajectory& traj, std::span<const double> times,
                             double dt) {
  std::vector<Field> out;
  for (double t : times) out.push_back(traj.T[step_count(0.0, t, dt)]);
  return out;
}

void add_noise(std::vector<Field>& fields, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw InvalidArgument("noise sigma must be nonnegative");
  if (sigma == 0.0) return;
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& f : fields) {
    for (double& v : f) v += noise(engine);
  }
}

void append(StateTrajectory& dst, StateTrajectory&& src) {
  const std::size_t skip = dst.times.empty() ? 0 : 1;
  for (std::size_t k = skip; k < src.times.size(); ++k) {
    dst.times.push_back(src.times[k]);
    dst.T.push_back(std::move(src.T[k]));
    dst.phi.push_back(std::move(src.phi[k]));
    dst.omega.push_back(std::move(src.omega[k]));
  }
}

void require_times(std::span<const double> times) {
  if (times.empty()) throw InvalidArgument("no measurement times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > (i == 0 ? 0.0 : times[i - 1]))) {
      throw InvalidArgument("measurement times must increase strictly and be positive");
    }
  }
}

}  // namespace

MeasurementSet make_measurement(const BioheatModel& model, std::span<const double> xi_true,
                                std::span<const double> times, double sigma, std::uint64_t seed,
                                double dt) {
  require_times(times);
  if (sigma < 0.0) throw InvalidArgument("noise sigma must be nonnegative");
  const StateTrajectory traj = rest_run(model, xi_true, times.back(), dt);
  MeasurementSet set;
  set.times.assign(times.begin(), times.end());
  set.fields = snapshots(traj, times, dt);
  set.noise_sigma = sigma;
  add_noise(set.fields, sigma, seed);
  return set;
}

MeasurementSet make_measurement_on(const BioheatModel& fine, std::span<const double> xi_true_fine,
                                   const BioheatModel& model, std::span<const double> times,
                                   double sigma, std::uint64_t seed, double dt) {
  require_times(times);
  if (sigma < 0.0) throw InvalidArgument("noise sigma must be nonnegative");
  const StateTrajectory traj = rest_run(fine, xi_true_fine, times.back(), dt);
  MeasurementSet set;
  set.times.assign(times.begin(), times.end());
  for (const Field& f : snapshots(traj, times, dt)) {
    set.fields.push_back(interpolate_field(fine.mesh(), f, model.mesh()));
  }
  set.noise_sigma = sigma;
  add_noise(set.fields, sigma, seed);
  return set;
}

Field interpolate_field(const AxiMesh& from, std::span<const double> field, const AxiMesh& to) {
  if (field.size() != from.num_nodes()) throw InvalidArgument("interpolate_field: bad field");
  const auto& nodes = from.nodes();
  const auto& tris = from.triangles();
  constexpr double kTol = 1e-10;
  Field out(to.num_nodes());
  for (std::size_t i = 0; i < to.num_nodes(); ++i) {
    const Point p = to.nodes()[i];
    bool found = false;
    for (const auto& t : tris) {
      const Point& a = nodes[t[0]];
      const Point& b = nodes[t[1]];
      const Point& c = nodes[t[2]];
      if (p.r < std::min({a.r, b.r, c.r}) - kTol || p.r > std::max({a.r, b.r, c.r}) + kTol ||
          p.z < std::min({a.z, b.z, c.z}) - kTol || p.z > std::max({a.z, b.z, c.z}) + kTol) {
        continue;
      }
      const double det = (b.r - a.r) * (c.z - a.z) - (c.r - a.r) * (b.z - a.z);
      const double l1 = ((p.r - a.r) * (c.z - a.z) - (c.r - a.r) * (p.z - a.z)) / det;
      const double l2 = ((b.r - a.r) * (p.z - a.z) - (p.r - a.r) * (b.z - a.z)) / det;
      const double l0 = 1.0 - l1 - l2;
      if (l0 < -kTol || l1 < -kTol || l2 < -kTol) continue;
      out[i] = l0 * field[t[0]] + l1 * field[t[1]] + l2 * field[t[2]];
      found = true;
      break;
    }
    if (!found) out[i] = field[from.nearest_node(p)];
  }
  return out;
}

Field smooth_measurement(std::span<const double> field, double end_time, const AxiMesh& mesh) {
  if (field.size() != mesh.num_nodes()) throw InvalidArgument("smooth_measurement: bad field");
  if (!(end_time >= 0.0)) throw InvalidArgument("smoothing end time must be nonnegative");
  Field u(field.begin(), field.end());
  if (end_time == 0.0) return u;
  constexpr int kSteps = 10;
  const SparseMatrix m = assemble_mass(mesh, 1.0);
  SparseMatrix a = assemble_stiffness(mesh, 1.0);
  a.scale(end_time / kSteps);
  a.add_scaled(1.0, m);
  const IncompleteCholesky pc(a);
  for (int s = 0; s < kSteps; ++s) {
    SolveResult res = cg_solve(a, m.multiply(u), pc, {1e-13, 0}, u);
    if (!res.report.converged) throw SolverError("smooth_measurement: solve did not converge");
    u = std::move(res.x);
  }
  return u;
}

void smooth_measurements(MeasurementSet& set, double end_time, const AxiMesh& mesh) {
  for (auto& f : set.fields) f = smooth_measurement(f, end_time, mesh);
  set.smoothing_end_time = end_time;
}

namespace {

struct NormPair {
  double linf = 0.0;
  double l2 = 0.0;
};

template <class Diff>
NormPair space_time_norms(const std::vector<double>& times, const SparseMatrix& mass,
                          std::size_t n, Diff&& diff) {
  NormPair out;
  double l2sq = 0.0;
  Field e(n);
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = diff(k, i);
      out.linf = std::max(out.linf, std::abs(e[i]));
    }
    double w = 0.0;
    if (k > 0) w += 0.5 * (times[k] - times[k - 1]);
    if (k + 1 < times.size()) w += 0.5 * (times[k + 1] - times[k]);
    l2sq += w * weighted_dot(e, e, mass);
  }
  out.l2 = std::sqrt(std::max(l2sq, 0.0));
  return out;
}

double relative(double abs_err, double ref_norm) {
  if (abs_err == 0.0) return 0.0;
  return ref_norm > 0.0 ? abs_err / ref_norm : std::numeric_limits<double>::infinity();
}

template <class Get>
ErrorNorms quantity_errors(const StateTrajectory& sim, const StateTrajectory& ref,
                           const SparseMatrix& mass, std::size_t n, Get&& get) {
  const NormPair err = space_time_norms(sim.times, mass, n, [&](std::size_t k, std::size_t i) {
    return get(sim, k, i) - get(ref, k, i);
  });
  const NormPair base = space_time_norms(ref.times, mass, n, [&](std::size_t k, std::size_t i) {
    return get(ref, k, i);
  });
  return {err.linf, relative(err.linf, base.linf), err.l2, relative(err.l2, base.l2)};
}

}  // namespace

ErrorTable compare_metrics(const StateTrajectory& sim, const StateTrajectory& ref,
                           const SparseMatrix& mass) {
  const std::size_t n = mass.rows();
  if (sim.times.size() != ref.times.size() || sim.times.empty()) {
    throw InvalidArgument("compare_metrics: time grids differ");
  }
  for (std::size_t k = 0; k < sim.times.size(); ++k) {
    if (std::abs(sim.times[k] - ref.times[k]) > 1e-9 * std::max(1.0, std::abs(ref.times[k]))) {
      throw InvalidArgument("compare_metrics: time grids differ");
    }
    if (sim.T[k].size() != n || ref.T[k].size() != n || sim.phi[k].size() != n ||
        ref.phi[k].size() != n || sim.omega[k].size() != n || ref.omega[k].size() != n) {
      throw InvalidArgument("compare_metrics: meshes differ");
    }
  }
  ErrorTable table;
  table.T = quantity_errors(sim, ref, mass, n, [](const StateTrajectory& s, std::size_t k,
                                                  std::size_t i) { return s.T[k][i]; });
  table.phi = quantity_errors(sim, ref, mass, n, [](const StateTrajectory& s, std::size_t k,
                                                    std::size_t i) { return s.phi[k][i]; });
  table.delta = quantity_errors(sim, ref, mass, n,
                                [](const StateTrajectory& s, std::size_t k, std::size_t i) {
                                  return damage_fraction(s.omega[k][i]);
                                });
  return table;
}

bool SequentialResult::line_search_failed() const {
  return std::any_of(intervals.begin(), intervals.end(), [](const IntervalRecord& r) {
    return r.status == IdentifyStatus::LineSearchFailed;
  });
}

SequentialResult sequential_identify(const BioheatModel& model, const MeasurementSet& meas,
                                     std::span<const double> xi0, const SequentialConfig& config) {
  const std::size_t n = model.num_nodes();
  meas.validate(n, config.tau_end);
  if (xi0.size() != n) throw InvalidArgument("sequential_identify: initial guess length mismatch");

  SequentialResult out;
  InitialState init{model.uniform(model.params().T0), model.uniform(0.0)};
  Field xi(xi0.begin(), xi0.end());
  double t0 = 0.0;
  for (std::size_t i = 0; i < meas.times.size(); ++i) {
    const double t1 = meas.times[i];
    IdentifyResult res;
    try {
      const ReducedProblem problem(model, init, t0, t1, config.dt, meas.fields[i], config.lambda);
      res = identify(problem, xi, config.optimizer);
    } catch (const SolverError& e) {
      throw SolverError("interval " + std::to_string(i + 1) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("interval " + std::to_string(i + 1) + ": " + e.what());
    }
    init = {res.state.T.back(), res.state.omega.back()};
    xi = res.xi;
    out.intervals.push_back({i + 1, t0, t1, res.xi, std::move(res.history), res.status});
    append(out.prediction, std::move(res.state));
    t0 = t1;
  }
  append(out.prediction,
         model.run_forward(xi, init.T, init.omega, t0, config.tau_end, config.dt));
  return out;
}

StateTrajectory simulate_therapy(const BioheatModel& model, std::span<const double> xi, double dt,
                                 double tau_end) {
  return rest_run(model, xi, tau_end, dt);
}

StateTrajectory simulate_schedule(const BioheatModel& model, std::span<const Field> xi_pieces,
                                  std::span<const double> breaks, double dt) {
  if (xi_pieces.empty() || breaks.size() != xi_pieces.size() + 1 || breaks.front() != 0.0) {
    throw InvalidArgument("simulate_schedule: need breaks 0 = b_0 < ... < b_m for m pieces");
  }
  StateTrajectory out;
  Field T = model.uniform(model.params().T0);
  Field omega = model.uniform(0.0);
  for (std::size_t i = 0; i < xi_pieces.size(); ++i) {
    StateTrajectory seg = model.run_forward(xi_pieces[i], T, omega, breaks[i], breaks[i + 1], dt);
    T = seg.T.back();
    omega = seg.omega.back();
    append(out, std::move(seg));
  }
  return out;
}

}  // namespace litt
