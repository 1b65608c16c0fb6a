#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "litt/forward.hpp"
#include "litt/identification.hpp"
#include "litt/mesh.hpp"
#include "litt/optimizer.hpp"
#include "litt/tissue.hpp"

namespace litt {

enum class OptimizerMethod { Lbfgs, GradientDescent };

struct MeasurementConfig {
  std::vector<double> times{60.0};
  double sigma = 0.0;  // K
  std::uint64_t seed = 1;
  double smoothing_end_time = 2e-7;  // m^2
  /// Smoothing is applied when true; defaults to sigma > 0.
  bool smooth = false;
  /// Generate on a once-refined mesh and interpolate down.
  bool refined_mesh = false;
};

/// Everything a run needs, read from a TOML file. Lengths in meters, times in
/// seconds; temperatures in the [tissue] table are given in degrees Celsius.
struct RunConfig {
  GeometryConfig geometry;
  TissueParams tissue;
  ModelOptions model;
  double dt = 1.0;
  std::vector<VesselSpec> vessels;
  MeasurementConfig measurement;
  double lambda = 0.0;
  OptimizerMethod method = OptimizerMethod::Lbfgs;
  OptimizerConfig optimizer;

  SequentialConfig sequential() const;
  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// Defaults for every table; the vessel list is the default layout.
RunConfig default_config();

/// Throws ConfigError on syntax errors, unknown keys or invalid values.
RunConfig parse_config(std::string_view toml_text, std::string_view source = "<string>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace litt
