#include "litt/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <toml.hpp>

#include "litt/errors.hpp"

namespace litt {

namespace {

// Reads keys from one TOML table and rejects keys nobody asked for.
class TableReader {
public:
  TableReader(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  void number(std::string_view key, double& out) {
    const toml::node* node = take(key);
    if (!node) return;
    if (auto v = node->value<double>()) {
      out = *v;
    } else {
      fail(key, "expected a number");
    }
  }

  void celsius(std::string_view key, double& kelvin_out) {
    double c = kelvin_to_celsius(kelvin_out);
    number(key, c);
    kelvin_out = celsius_to_kelvin(c);
  }

  template <class Int>
  void integer(std::string_view key, Int& out) {
    const toml::node* node = take(key);
    if (!node) return;
    const auto v = node->value_exact<int64_t>();
    if (!v || *v < 0) fail(key, "expected a nonnegative integer");
    out = static_cast<Int>(*v);
  }

  void boolean(std::string_view key, bool& out) {
    const toml::node* node = take(key);
    if (!node) return;
    if (auto v = node->value_exact<bool>()) {
      out = *v;
    } else {
      fail(key, "expected true or false");
    }
  }

  bool text(std::string_view key, std::string& out) {
    const toml::node* node = take(key);
    if (!node) return false;
    if (auto v = node->value_exact<std::string>()) {
      out = *v;
      return true;
    }
    fail(key, "expected a string");
  }

  bool number_list(std::string_view key, std::vector<double>& out) {
    const toml::node* node = take(key);
    if (!node) return false;
    const toml::array* arr = node->as_array();
    if (!arr) fail(key, "expected an array of numbers");
    out.clear();
    for (const auto& item : *arr) {
      auto v = item.value<double>();
      if (!v) fail(key, "expected an array of numbers");
      out.push_back(*v);
    }
    return true;
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [key, node] : *table_) {
      if (!used_.count(std::string(key.str()))) {
        throw ConfigError("[" + name_ + "]: unknown key '" + std::string(key.str()) + "'");
      }
    }
  }

private:
  const toml::node* take(std::string_view key) {
    if (!table_) return nullptr;
    used_.insert(std::string(key));
    return table_->get(key);
  }

  [[noreturn]] void fail(std::string_view key, const char* what) const {
    throw ConfigError("[" + name_ + "] " + std::string(key) + ": " + what);
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

const toml::table* subtable(const toml::table& root, std::string_view name) {
  const toml::node* node = root.get(name);
  if (!node) return nullptr;
  const toml::table* t = node->as_table();
  if (!t) throw ConfigError("'" + std::string(name) + "' must be a table");
  return t;
}

void read_geometry(const toml::table& root, GeometryConfig& g) {
  TableReader r(subtable(root, "geometry"), "geometry");
  r.number("liver_radius", g.liver_radius);
  r.number("liver_half_height", g.liver_half_height);
  r.number("applicator_radius", g.applicator_radius);
  r.number("radiating_half_length", g.radiating_half_length);
  r.number("cooled_length", g.cooled_length);
  r.number("target_edge_size", g.target_edge_size);
  r.finish();
}

void read_tissue(const toml::table& root, TissueParams& p) {
  TableReader r(subtable(root, "tissue"), "tissue");
  r.number("rho", p.rho);
  r.number("cp", p.cp);
  r.number("kappa", p.kappa);
  r.number("alpha_cool", p.alpha_cool);
  r.number("alpha_amb", p.alpha_amb);
  r.number("beta_q", p.beta_q);
  r.number("q_hat_app", p.q_hat_app);
  r.celsius("T0", p.T0);
  r.celsius("T_cool", p.T_cool);
  r.celsius("T_b", p.T_b);
  r.celsius("T_amb", p.T_amb);
  r.number("R_gas", p.R_gas);
  r.number("A_freq", p.A_freq);
  r.number("E_a", p.E_a);
  r.number("xi_max", p.xi_max);
  r.number("mu_a_n", p.mu_a_n);
  r.number("mu_a_c", p.mu_a_c);
  r.number("mu_s_n", p.mu_s_n);
  r.number("mu_s_c", p.mu_s_c);
  r.number("g_n", p.g_n);
  r.number("g_c", p.g_c);
  r.finish();
}

void read_time(const toml::table& root, RunConfig& cfg) {
  TableReader r(subtable(root, "time"), "time");
  r.number("dt", cfg.dt);
  r.number("tau_end", cfg.tissue.tau_end);
  r.number("t_on", cfg.tissue.t_on);
  r.number("t_off", cfg.tissue.t_off);
  r.finish();
}

void read_model(const toml::table& root, ModelOptions& m) {
  TableReader r(subtable(root, "model"), "model");
  r.boolean("couple_damage", m.couple_damage);
  r.number("linear_tol", m.linear.rel_tol);
  r.finish();
}

VesselSpec read_vessel(const toml::table& t, std::size_t index, double default_amplitude) {
  TableReader r(&t, "vessels." + std::to_string(index));
  VesselSpec v;
  v.amplitude = default_amplitude;
  std::string kind;
  if (r.text("kind", kind)) v.kind = vessel_kind_from_string(kind);
  std::vector<double> center;
  if (!r.number_list("center", center) || center.size() != 2) {
    throw ConfigError("vessel " + std::to_string(index) + ": center = [r, z] is required");
  }
  v.center = {center[0], center[1]};
  r.number("extent", v.extent);
  r.number("amplitude", v.amplitude);
  r.finish();
  v.validate();
  return v;
}

void read_vessels(const toml::table& root, RunConfig& cfg) {
  const double amp = cfg.tissue.xi_max;
  const toml::node* node = root.get("vessels");
  if (!node) {
    cfg.vessels = default_vessels(cfg.geometry, amp);
    return;
  }
  if (const toml::array* arr = node->as_array()) {
    cfg.vessels.clear();
    std::size_t i = 0;
    for (const auto& item : *arr) {
      const toml::table* t = item.as_table();
      if (!t) throw ConfigError("[[vessels]] entries must be tables");
      cfg.vessels.push_back(read_vessel(*t, i++, amp));
    }
    return;
  }
  // A plain [vessels] table tunes the default layout.
  TableReader r(subtable(root, "vessels"), "vessels");
  std::string layout = "default", kind = "gaussian";
  double extent = 1e-3, amplitude = amp;
  r.text("layout", layout);
  r.text("kind", kind);
  r.number("extent", extent);
  r.number("amplitude", amplitude);
  r.finish();
  if (layout != "default") throw ConfigError("[vessels] layout must be 'default'");
  cfg.vessels = default_vessels(cfg.geometry, amplitude, extent);
  const VesselKind k = vessel_kind_from_string(kind);
  for (auto& v : cfg.vessels) {
    v.kind = k;
    v.validate();
  }
}

void read_measurement(const toml::table& root, MeasurementConfig& m) {
  TableReader r(subtable(root, "measurement"), "measurement");
  r.number_list("times", m.times);
  r.number("sigma", m.sigma);
  r.integer("seed", m.seed);
  r.number("smoothing_end_time", m.smoothing_end_time);
  m.smooth = m.sigma > 0.0;
  r.boolean("smooth", m.smooth);
  r.boolean("refined_mesh", m.refined_mesh);
  r.finish();
}

void read_optimizer(const toml::table& root, RunConfig& cfg) {
  TableReader r(subtable(root, "optimizer"), "optimizer");
  cfg.lambda = cfg.measurement.sigma > 0.0 ? 2.5e-10 : 0.0;
  r.number("lambda", cfg.lambda);
  std::string method;
  if (r.text("method", method)) {
    if (method == "lbfgs") {
      cfg.method = OptimizerMethod::Lbfgs;
    } else if (method == "gradient") {
      cfg.method = OptimizerMethod::GradientDescent;
    } else {
      throw ConfigError("[optimizer] method must be 'lbfgs' or 'gradient'");
    }
  }
  auto& o = cfg.optimizer;
  r.number("tol", o.tol);
  r.integer("max_iter", o.max_iter);
  r.integer("memory", o.memory);
  r.number("beta", o.beta);
  r.number("c", o.c);
  r.integer("max_trials", o.max_trials);
  r.number("eps_curv", o.eps_curv);
  r.finish();
  if (cfg.method == OptimizerMethod::GradientDescent) o.memory = 0;
}

}  // namespace

SequentialConfig RunConfig::sequential() const {
  SequentialConfig s;
  s.dt = dt;
  s.tau_end = tissue.tau_end;
  s.lambda = lambda;
  s.optimizer = optimizer;
  if (method == OptimizerMethod::GradientDescent) s.optimizer.memory = 0;
  return s;
}

void RunConfig::validate() const {
  geometry.validate();
  tissue.validate();
  if (!(dt > 0.0)) throw ConfigError("[time] dt must be positive");
  auto multiple = [&](double t, const char* what) {
    const double ratio = t / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      throw ConfigError(std::string(what) + " must be a multiple of dt");
    }
  };
  multiple(tissue.tau_end, "[time] tau_end");
  if (measurement.times.empty()) throw ConfigError("[measurement] times must not be empty");
  for (std::size_t i = 0; i < measurement.times.size(); ++i) {
    const double t = measurement.times[i];
    if (!(t > (i == 0 ? 0.0 : measurement.times[i - 1]))) {
      throw ConfigError("[measurement] times must be positive and strictly increasing");
    }
    multiple(t, "[measurement] times");
  }
  if (!(measurement.times.back() < tissue.tau_end)) {
    throw ConfigError("[measurement] last time must precede tau_end");
  }
  if (!(measurement.sigma >= 0.0)) throw ConfigError("[measurement] sigma must be nonnegative");
  if (!(measurement.smoothing_end_time >= 0.0)) {
    throw ConfigError("[measurement] smoothing_end_time must be nonnegative");
  }
  if (!(lambda >= 0.0)) throw ConfigError("[optimizer] lambda must be nonnegative");
  if (!(optimizer.tol >= 0.0)) throw ConfigError("[optimizer] tol must be nonnegative");
  if (!(optimizer.beta > 0.0 && optimizer.beta < 1.0)) {
    throw ConfigError("[optimizer] beta must lie in (0, 1)");
  }
  if (!(optimizer.c > 0.0 && optimizer.c < 1.0)) throw ConfigError("[optimizer] c must lie in (0, 1)");
  if (optimizer.max_trials < 1) throw ConfigError("[optimizer] max_trials must be at least 1");
  if (!(model.linear.rel_tol > 0.0)) throw ConfigError("[model] linear_tol must be positive");
  for (const auto& v : vessels) v.validate();
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.vessels = default_vessels(cfg.geometry, cfg.tissue.xi_max);
  return cfg;
}

RunConfig parse_config(std::string_view toml_text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  for (const auto& [key, node] : root) {
    static const std::set<std::string> known{"geometry",    "tissue",    "time", "model",
                                             "vessels",     "measurement", "optimizer"};
    if (!known.count(std::string(key.str()))) {
      throw ConfigError("unknown table '" + std::string(key.str()) + "'");
    }
  }
  RunConfig cfg;
  read_geometry(root, cfg.geometry);
  read_tissue(root, cfg.tissue);
  read_time(root, cfg);
  read_model(root, cfg.model);
  read_vessels(root, cfg);
  read_measurement(root, cfg.measurement);
  read_optimizer(root, cfg);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace litt
