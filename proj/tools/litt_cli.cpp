#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "litt/config.hpp"
#include "litt/errors.hpp"
#include "litt/identification.hpp"
#include "litt/io.hpp"
#include "litt/mesh.hpp"

namespace fs = std::filesystem;
using namespace litt;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kSolver = 3, kLineSearch = 4 };

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  return in;
}

fs::path sibling(const fs::path& base, const std::string& suffix) {
  return base.parent_path() / (base.stem().string() + suffix);
}

BioheatModel make_model(const RunConfig& cfg) {
  return BioheatModel(build_mesh(cfg.geometry), cfg.tissue, cfg.model);
}

int run_forward(const RunConfig& cfg, const fs::path& out_dir, const std::string& xi_file,
                std::size_t every) {
  const BioheatModel model = make_model(cfg);
  const PerfusionSchedule schedule =
      xi_file.empty()
          ? PerfusionSchedule{{0.0, cfg.tissue.tau_end},
                              {synthesize_perfusion(cfg.vessels, model.mesh())}}
          : read_perfusion_file(xi_file, model.mesh(), cfg.tissue.tau_end);
  std::cout << "mesh: " << model.num_nodes() << " nodes, " << model.mesh().num_triangles()
            << " triangles\n";
  const auto t0 = std::chrono::steady_clock::now();
  const StateTrajectory traj = simulate_schedule(model, schedule.xi, schedule.breaks, cfg.dt);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "simulated " << traj.steps() << " steps in " << secs << " s\n";

  fs::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "perfusion.csv");
    write_field_csv(out, model.mesh(), schedule.xi.back());
  }
  {
    auto out = open_out(out_dir / "temperature_final.csv");
    write_field_csv(out, model.mesh(), traj.T.back());
  }
  {
    auto out = open_out(out_dir / "summary.csv");
    write_summary_csv(out, traj, model.mass());
  }
  const auto files =
      write_vtk_series(out_dir / "vtk", "state", model.mesh(), traj, schedule.xi.back(), every);
  std::cout << "wrote " << files.size() << " VTK files to " << (out_dir / "vtk").string() << "\n";
  return kOk;
}

int run_make_measurement(const RunConfig& cfg, const fs::path& out_path) {
  const BioheatModel model = make_model(cfg);
  const auto& mc = cfg.measurement;
  MeasurementSet set;
  if (mc.refined_mesh) {
    GeometryConfig fine_geom = cfg.geometry;
    fine_geom.target_edge_size *= 0.5;
    const BioheatModel fine(build_mesh(fine_geom), cfg.tissue, cfg.model);
    const Field xi_fine = synthesize_perfusion(cfg.vessels, fine.mesh());
    set = make_measurement_on(fine, xi_fine, model, mc.times, mc.sigma, mc.seed, cfg.dt);
  } else {
    const Field xi = synthesize_perfusion(cfg.vessels, model.mesh());
    set = make_measurement(model, xi, mc.times, mc.sigma, mc.seed, cfg.dt);
  }
  auto out = open_out(out_path);
  write_measurement_csv(out, model.mesh(), set);
  std::cout << "wrote " << set.times.size() << " snapshot(s) on " << model.num_nodes()
            << " nodes to " << out_path.string() << "\n";
  return kOk;
}

int run_identify(const RunConfig& cfg, const fs::path& meas_path, const fs::path& out_path,
                 const std::string& xi0_file) {
  const BioheatModel model = make_model(cfg);
  auto in = open_in(meas_path);
  MeasurementSet meas = read_measurement_csv(in, model.mesh());
  meas.noise_sigma = cfg.measurement.sigma;
  if (cfg.measurement.smooth) {
    smooth_measurements(meas, cfg.measurement.smoothing_end_time, model.mesh());
  }
  Field xi0 = model.uniform(0.0);
  if (!xi0_file.empty()) {
    auto xin = open_in(xi0_file);
    xi0 = read_field_csv(xin, model.mesh());
  }
  const SequentialResult res = sequential_identify(model, meas, xi0, cfg.sequential());

  {
    auto out = open_out(out_path);
    write_field_csv(out, model.mesh(), res.final_xi());
  }
  const bool multi = res.intervals.size() > 1;
  for (const auto& rec : res.intervals) {
    const std::string suffix =
        multi ? "_history_" + std::to_string(rec.index) + ".csv" : "_history.csv";
    auto out = open_out(sibling(out_path, suffix));
    write_history_csv(out, rec.history);
    const auto& last = rec.history.back();
    std::printf("interval %zu [%g, %g] s: %s after %d iterations, J = %.6e, sigma ratio = %.3e\n",
                rec.index, rec.t_start, rec.t_end, to_string(rec.status), last.k,
                last.cost.total,
                rec.history.front().stationarity > 0
                    ? last.stationarity / rec.history.front().stationarity
                    : 0.0);
  }
  if (multi) {
    PerfusionSchedule schedule;
    schedule.breaks.push_back(0.0);
    for (const auto& rec : res.intervals) {
      schedule.breaks.push_back(rec.t_end);
      schedule.xi.push_back(rec.xi);
    }
    schedule.breaks.back() = cfg.tissue.tau_end;
    auto out = open_out(sibling(out_path, "_schedule.csv"));
    write_schedule_csv(out, model.mesh(), schedule);
  }
  return res.line_search_failed() ? kLineSearch : kOk;
}

int run_compare(const RunConfig& cfg, const fs::path& sim_path, const fs::path& ref_path,
                const fs::path& out_path) {
  const BioheatModel model = make_model(cfg);
  const double tau = cfg.tissue.tau_end;
  const PerfusionSchedule sim = read_perfusion_file(sim_path, model.mesh(), tau);
  const PerfusionSchedule ref = read_perfusion_file(ref_path, model.mesh(), tau);
  const StateTrajectory sim_traj = simulate_schedule(model, sim.xi, sim.breaks, cfg.dt);
  const StateTrajectory ref_traj = simulate_schedule(model, ref.xi, ref.breaks, cfg.dt);
  const ErrorTable table = compare_metrics(sim_traj, ref_traj, model.mass());
  auto out = open_out(out_path);
  write_error_table_csv(out, table);
  write_error_table_csv(std::cout, table);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laser-induced thermotherapy simulation and perfusion identification"};
  app.require_subcommand(1);

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "TOML run configuration")->required();
  };

  auto* forward = app.add_subcommand("forward", "simulate the full therapy");
  add_config(forward);
  std::string forward_out = "forward_out", forward_xi;
  std::size_t every = 30;
  forward->add_option("-o,--output", forward_out, "output directory");
  forward->add_option("--xi", forward_xi, "perfusion field or schedule CSV (default: vessels)");
  forward->add_option("--every", every, "VTK output stride in steps")->check(CLI::PositiveNumber);

  auto* make_meas = app.add_subcommand("make-measurement", "generate synthetic measurements");
  add_config(make_meas);
  std::string meas_out;
  make_meas->add_option("-o,--output", meas_out, "measurement CSV")->required();

  auto* ident = app.add_subcommand("identify", "identify the perfusion field");
  add_config(ident);
  std::string meas_in, xi_out, xi0_in;
  ident->add_option("--meas", meas_in, "measurement CSV")->required();
  ident->add_option("-o,--output", xi_out, "identified perfusion CSV")->required();
  ident->add_option("--xi0", xi0_in, "initial guess field CSV (default: zero)");

  auto* compare = app.add_subcommand("compare", "error table between two perfusion inputs");
  add_config(compare);
  std::string sim_in, ref_in, err_out;
  compare->add_option("--sim", sim_in, "simulated perfusion field or schedule CSV")->required();
  compare->add_option("--ref", ref_in, "reference perfusion field or schedule CSV")->required();
  compare->add_option("-o,--output", err_out, "error table CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    const RunConfig cfg = load_config(config_path);
    if (*forward) return run_forward(cfg, forward_out, forward_xi, every);
    if (*make_meas) return run_make_measurement(cfg, meas_out);
    if (*ident) return run_identify(cfg, meas_in, xi_out, xi0_in);
    if (*compare) return run_compare(cfg, sim_in, ref_in, err_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const LineSearchError& e) {
    std::cerr << "line search failure: " << e.what() << "\n";
    return kLineSearch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
