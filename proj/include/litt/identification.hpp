#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "litt/forward.hpp"
#include "litt/mesh.hpp"
#include "litt/optimizer.hpp"

namespace litt {

enum class VesselKind { Gaussian, Square };

std::string_view to_string(VesselKind kind);
/// Throws ConfigError on an unknown name.
VesselKind vessel_kind_from_string(std::string_view name);

/// One blood vessel crossing the (r, z) section.
struct VesselSpec {
  VesselKind kind = VesselKind::Gaussian;
  Point center{0.0, 0.0};
  /// Standard deviation (gaussian) or half-width (square), meters.
  double extent = 1e-3;
  double amplitude = 6e4;

  void validate() const;
};

/// Two columns of five vessels beside the radiating wall, at 4 mm and 8 mm
/// from the applicator surface with 5 mm vertical spacing. The middle vessel
/// of the inner column is 1.5 times wider than the others.
std::vector<VesselSpec> default_vessels(const GeometryConfig& geom, double amplitude,
                                        double extent = 1e-3);

/// Nodal sum of the vessel profiles, clamped to the largest single amplitude.
Field synthesize_perfusion(std::span<const VesselSpec> vessels, const AxiMesh& mesh);

/// Temperature snapshots at increasing times.
struct MeasurementSet {
  std::vector<double> times;
  std::vector<Field> fields;
  double noise_sigma = 0.0;
  double smoothing_end_time = 0.0;

  /// Throws InvalidArgument unless the times increase strictly, every field
  /// has n entries and the last time lies before tau_end.
  void validate(std::size_t n, double tau_end) const;
};

/// Simulates from the resting state (T0, omega = 0) with xi_true and records T
/// at each time, adding i.i.d. N(0, sigma^2) nodal noise from a seeded engine.
MeasurementSet make_measurement(const BioheatModel& model, std::span<const double> xi_true,
                                std::span<const double> times, double sigma, std::uint64_t seed,
                                double dt);

/// Same as make_measurement but simulated on `fine` and interpolated onto the
/// nodes of `model`'s mesh.
MeasurementSet make_measurement_on(const BioheatModel& fine, std::span<const double> xi_true_fine,
                                   const BioheatModel& model, std::span<const double> times,
                                   double sigma, std::uint64_t seed, double dt);

/// P1 interpolation of a field given on `from` at the nodes of `to`. Nodes of
/// `to` outside `from` take the value of the nearest node.
Field interpolate_field(const AxiMesh& from, std::span<const double> field, const AxiMesh& to);

/// Linear diffusion u_t = div(grad u) with zero flux, ten implicit steps up to
/// end_time (m^2).
Field smooth_measurement(std::span<const double> field, double end_time, const AxiMesh& mesh);

/// Applies smooth_measurement to every snapshot and records the end time.
void smooth_measurements(MeasurementSet& set, double end_time, const AxiMesh& mesh);

struct ErrorNorms {
  double linf_abs = 0.0;
  double linf_rel = 0.0;
  double l2_abs = 0.0;
  double l2_rel = 0.0;
};

/// Errors in L-inf(0,tau;L-inf) and L2(0,tau;L2) for temperature, radiative
/// energy and tissue damage delta = 1 - exp(-omega).
struct ErrorTable {
  ErrorNorms T;
  ErrorNorms phi;
  ErrorNorms delta;
};

/// Errors of `sim` against `ref`. The space integral uses the mass matrix and
/// time the trapezoidal rule. Throws InvalidArgument when the grids differ.
ErrorTable compare_metrics(const StateTrajectory& sim, const StateTrajectory& ref,
                           const SparseMatrix& mass);

struct SequentialConfig {
  double dt = 1.0;
  double tau_end = 1200.0;
  double lambda = 0.0;
  OptimizerConfig optimizer;
};

struct IntervalRecord {
  std::size_t index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  Field xi;
  std::vector<IterationRecord> history;
  IdentifyStatus status = IdentifyStatus::MaxIterations;
};

struct SequentialResult {
  std::vector<IntervalRecord> intervals;
  /// Simulation over [0, tau_end] with the piecewise-constant perfusion.
  StateTrajectory prediction;

  const Field& final_xi() const { return intervals.back().xi; }
  bool line_search_failed() const;
};

/// Identifies one perfusion field per measurement interval, each interval
/// starting from the state simulated on the previous one, then predicts up to
/// tau_end with the last field. Solver failures are rethrown with the
/// interval index in the message.
SequentialResult sequential_identify(const BioheatModel& model, const MeasurementSet& meas,
                                     std::span<const double> xi0, const SequentialConfig& config);

/// Forward run over [0, tau_end] from the resting state.
StateTrajectory simulate_therapy(const BioheatModel& model, std::span<const double> xi, double dt,
                                 double tau_end);

/// Forward run with perfusion xi_pieces[i] on [breaks[i], breaks[i+1]].
/// breaks starts at 0 and ends at tau_end.
StateTrajectory simulate_schedule(const BioheatModel& model, std::span<const Field> xi_pieces,
                                  std::span<const double> breaks, double dt);

}  // namespace litt
