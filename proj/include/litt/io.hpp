#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "litt/forward.hpp"
#include "litt/identification.hpp"
#include "litt/mesh.hpp"

namespace litt {

/// node_id,r,z,value
void write_field_csv(std::ostream& os, const AxiMesh& mesh, std::span<const double> field);
/// Reads a field written by write_field_csv; every node must appear once.
Field read_field_csv(std::istream& is, const AxiMesh& mesh);

/// time,node_id,r,z,value (one block per measurement time)
void write_measurement_csv(std::ostream& os, const AxiMesh& mesh, const MeasurementSet& set);
MeasurementSet read_measurement_csv(std::istream& is, const AxiMesh& mesh);

/// Piecewise-constant perfusion: xi[i] acts on [breaks[i], breaks[i+1]].
struct PerfusionSchedule {
  std::vector<double> breaks;
  std::vector<Field> xi;
};

/// t_start,t_end,node_id,r,z,value
void write_schedule_csv(std::ostream& os, const AxiMesh& mesh, const PerfusionSchedule& schedule);
PerfusionSchedule read_schedule_csv(std::istream& is, const AxiMesh& mesh);

/// Reads either a schedule or a single field (applied on [0, tau_end]),
/// chosen from the header line.
PerfusionSchedule read_perfusion_file(const std::filesystem::path& path, const AxiMesh& mesh,
                                      double tau_end);

using NamedField = std::pair<std::string, std::span<const double>>;

/// Legacy ASCII VTK unstructured grid in the (r, z) plane with point data.
void write_vtk(std::ostream& os, const AxiMesh& mesh, std::span<const NamedField> fields,
               double time = 0.0);

/// Writes prefix_NNNN.vtk every `every` steps (always including the last)
/// and returns the written paths.
std::vector<std::filesystem::path> write_vtk_series(const std::filesystem::path& dir,
                                                    const std::string& prefix,
                                                    const AxiMesh& mesh,
                                                    const StateTrajectory& traj,
                                                    std::span<const double> xi,
                                                    std::size_t every);

/// time,T_min,T_max,T_mean,delta_max per trajectory step; means use the mass matrix.
void write_summary_csv(std::ostream& os, const StateTrajectory& traj, const SparseMatrix& mass);

/// quantity,norm,absolute,relative
void write_error_table_csv(std::ostream& os, const ErrorTable& table);

}  // namespace litt
