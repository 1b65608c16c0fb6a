#include "litt/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "litt/errors.hpp"

namespace litt {

namespace {

constexpr int kPrecision = 17;

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

std::size_t parse_index(const std::string& s, std::size_t n, std::size_t line_no) {
  const double v = parse_double(s, line_no);
  if (v < 0 || v != std::floor(v) || v >= static_cast<double>(n)) {
    throw InvalidArgument("line " + std::to_string(line_no) + ": node id out of range");
  }
  return static_cast<std::size_t>(v);
}

std::string read_header(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void expect_header(const std::string& got, const char* want) {
  if (got != want) {
    throw InvalidArgument("unexpected CSV header '" + got + "', expected '" + want + "'");
  }
}

// Fills one field from rows keyed by node id, checking completeness.
class FieldCollector {
public:
  explicit FieldCollector(std::size_t n) : values_(n, 0.0), seen_(n, false) {}

  void set(std::size_t node, double v, std::size_t line_no) {
    if (seen_[node]) {
      throw InvalidArgument("line " + std::to_string(line_no) + ": node listed twice");
    }
    seen_[node] = true;
    values_[node] = v;
    ++count_;
  }

  Field take(const std::string& what) {
    if (count_ != values_.size()) {
      throw InvalidArgument(what + ": " + std::to_string(count_) + " of " +
                            std::to_string(values_.size()) + " nodes given");
    }
    return std::move(values_);
  }

private:
  Field values_;
  std::vector<bool> seen_;
  std::size_t count_ = 0;
};

void write_node_row(std::ostream& os, const AxiMesh& mesh, std::size_t i, double v) {
  const Point& p = mesh.nodes()[i];
  os << i << ',' << p.r << ',' << p.z << ',' << v << '\n';
}

}  // namespace

void write_field_csv(std::ostream& os, const AxiMesh& mesh, std::span<const double> field) {
  if (field.size() != mesh.num_nodes()) throw InvalidArgument("write_field_csv: bad field");
  os.precision(kPrecision);
  os << "node_id,r,z,value\n";
  for (std::size_t i = 0; i < field.size(); ++i) write_node_row(os, mesh, i, field[i]);
}

Field read_field_csv(std::istream& is, const AxiMesh& mesh) {
  expect_header(read_header(is), "node_id,r,z,value");
  FieldCollector collector(mesh.num_nodes());
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != 4) throw InvalidArgument("line " + std::to_string(line_no) + ": need 4 columns");
    collector.set(parse_index(cells[0], mesh.num_nodes(), line_no), parse_double(cells[3], line_no),
                  line_no);
  }
  return collector.take("field CSV");
}

void write_measurement_csv(std::ostream& os, const AxiMesh& mesh, const MeasurementSet& set) {
  os.precision(kPrecision);
  os << "time,node_id,r,z,value\n";
  for (std::size_t k = 0; k < set.times.size(); ++k) {
    if (set.fields[k].size() != mesh.num_nodes()) {
      throw InvalidArgument("write_measurement_csv: bad field");
    }
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      os << set.times[k] << ',';
      write_node_row(os, mesh, i, set.fields[k][i]);
    }
  }
}

MeasurementSet read_measurement_csv(std::istream& is, const AxiMesh& mesh) {
  expect_header(read_header(is), "time,node_id,r,z,value");
  std::map<double, FieldCollector> blocks;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != 5) throw InvalidArgument("line " + std::to_string(line_no) + ": need 5 columns");
    const double t = parse_double(cells[0], line_no);
    auto it = blocks.try_emplace(t, mesh.num_nodes()).first;
    it->second.set(parse_index(cells[1], mesh.num_nodes(), line_no), parse_double(cells[4], line_no),
                   line_no);
  }
  if (blocks.empty()) throw InvalidArgument("measurement CSV has no rows");
  MeasurementSet set;
  for (auto& [t, collector] : blocks) {
    set.times.push_back(t);
    set.fields.push_back(collector.take("measurement at t=" + std::to_string(t)));
  }
  return set;
}

void write_schedule_csv(std::ostream& os, const AxiMesh& mesh, const PerfusionSchedule& schedule) {
  if (schedule.breaks.size() != schedule.xi.size() + 1) {
    throw InvalidArgument("write_schedule_csv: breaks/pieces mismatch");
  }
  os.precision(kPrecision);
  os << "t_start,t_end,node_id,r,z,value\n";
  for (std::size_t k = 0; k < schedule.xi.size(); ++k) {
    if (schedule.xi[k].size() != mesh.num_nodes()) throw InvalidArgument("write_schedule_csv: bad field");
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      os << schedule.breaks[k] << ',' << schedule.breaks[k + 1] << ',';
      write_node_row(os, mesh, i, schedule.xi[k][i]);
    }
  }
}

PerfusionSchedule read_schedule_csv(std::istream& is, const AxiMesh& mesh) {
  expect_header(read_header(is), "t_start,t_end,node_id,r,z,value");
  std::map<std::pair<double, double>, FieldCollector> blocks;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != 6) throw InvalidArgument("line " + std::to_string(line_no) + ": need 6 columns");
    const std::pair<double, double> key{parse_double(cells[0], line_no),
                                        parse_double(cells[1], line_no)};
    auto it = blocks.try_emplace(key, mesh.num_nodes()).first;
    it->second.set(parse_index(cells[2], mesh.num_nodes(), line_no), parse_double(cells[5], line_no),
                   line_no);
  }
  if (blocks.empty()) throw InvalidArgument("schedule CSV has no rows");
  PerfusionSchedule schedule;
  for (auto& [key, collector] : blocks) {
    if (schedule.breaks.empty()) {
      schedule.breaks.push_back(key.first);
    } else if (key.first != schedule.breaks.back()) {
      throw InvalidArgument("schedule intervals are not contiguous");
    }
    if (!(key.second > key.first)) throw InvalidArgument("schedule interval is empty");
    schedule.breaks.push_back(key.second);
    schedule.xi.push_back(collector.take("schedule piece"));
  }
  if (schedule.breaks.front() != 0.0) throw InvalidArgument("schedule must start at t = 0");
  return schedule;
}

PerfusionSchedule read_perfusion_file(const std::filesystem::path& path, const AxiMesh& mesh,
                                      double tau_end) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  const std::string header = read_header(in);
  in.clear();
  in.seekg(0);
  if (header.rfind("t_start", 0) == 0) return read_schedule_csv(in, mesh);
  PerfusionSchedule schedule;
  schedule.breaks = {0.0, tau_end};
  schedule.xi.push_back(read_field_csv(in, mesh));
  return schedule;
}

void write_vtk(std::ostream& os, const AxiMesh& mesh, std::span<const NamedField> fields,
               double time) {
  os.precision(kPrecision);
  os << "# vtk DataFile Version 3.0\n";
  os << "axisymmetric section (x = r, y = z) t = " << time << "\n";
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_nodes() << " double\n";
  for (const Point& p : mesh.nodes()) os << p.r << ' ' << p.z << " 0\n";
  const std::size_t nt = mesh.num_triangles();
  os << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << nt << '\n';
  for (std::size_t e = 0; e < nt; ++e) os << "5\n";
  if (fields.empty()) return;
  os << "POINT_DATA " << mesh.num_nodes() << '\n';
  for (const auto& [name, values] : fields) {
    if (values.size() != mesh.num_nodes()) throw InvalidArgument("write_vtk: bad field " + name);
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) os << v << '\n';
  }
}

std::vector<std::filesystem::path> write_vtk_series(const std::filesystem::path& dir,
                                                    const std::string& prefix,
                                                    const AxiMesh& mesh,
                                                    const StateTrajectory& traj,
                                                    std::span<const double> xi,
                                                    std::size_t every) {
  if (every == 0) throw InvalidArgument("write_vtk_series: stride must be positive");
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  Field delta(mesh.num_nodes());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    if (k % every != 0 && k + 1 != traj.times.size()) continue;
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = damage_fraction(traj.omega[k][i]);
    char name[32];
    std::snprintf(name, sizeof(name), "_%04zu.vtk", k);
    const auto path = dir / (prefix + name);
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    const std::vector<NamedField> fields{{"temperature", traj.T[k]},
                                         {"radiative_energy", traj.phi[k]},
                                         {"damage", delta},
                                         {"perfusion", xi}};
    write_vtk(out, mesh, fields, traj.times[k]);
    written.push_back(path);
  }
  return written;
}

void write_summary_csv(std::ostream& os, const StateTrajectory& traj, const SparseMatrix& mass) {
  os.precision(12);
  os << "time,T_min,T_max,T_mean,delta_max\n";
  const Field ones(mass.rows(), 1.0);
  const Vector lumped = mass.multiply(ones);
  double volume = 0.0;
  for (double v : lumped) volume += v;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto& T = traj.T[k];
    const auto [lo, hi] = std::minmax_element(T.begin(), T.end());
    double mean = 0.0;
    for (std::size_t i = 0; i < T.size(); ++i) mean += lumped[i] * T[i];
    const double omega_max = *std::max_element(traj.omega[k].begin(), traj.omega[k].end());
    os << traj.times[k] << ',' << *lo << ',' << *hi << ',' << mean / volume << ','
       << damage_fraction(omega_max) << '\n';
  }
}

void write_error_table_csv(std::ostream& os, const ErrorTable& table) {
  os.precision(12);
  os << "quantity,norm,absolute,relative\n";
  const std::pair<const char*, const ErrorNorms*> rows[] = {
      {"T", &table.T}, {"phi", &table.phi}, {"delta", &table.delta}};
  for (const auto& [name, e] : rows) {
    os << name << ",Linf_Linf," << e->linf_abs << ',' << e->linf_rel << '\n';
    os << name << ",L2_L2," << e->l2_abs << ',' << e->l2_rel << '\n';
  }
}

}  // namespace litt
