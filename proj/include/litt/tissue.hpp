#pragma once

namespace litt {

inline constexpr double kCelsiusOffset = 273.15;

constexpr double celsius_to_kelvin(double c) { return c + kCelsiusOffset; }
constexpr double kelvin_to_celsius(double k) { return k - kCelsiusOffset; }

/// Liver tissue constants (SI, temperatures in kelvin). Defaults are the
/// ex-vivo porcine liver values used throughout the experiments.
struct TissueParams {
  double rho = 1.08e3;        // kg m^-3
  double cp = 3.69e3;         // J kg^-1 K^-1
  double kappa = 0.48;        // W m^-1 K^-1
  double alpha_cool = 250.0;  // W K^-1 m^-2
  double alpha_amb = 0.0;     // W K^-1 m^-2
  double beta_q = 0.14;
  double q_hat_app = 22.0;  // W
  double t_on = 25.0;       // s
  double t_off = 1175.0;    // s
  double tau_end = 1200.0;  // s
  double T0 = celsius_to_kelvin(21.8);
  double T_cool = celsius_to_kelvin(20.0);
  double T_b = celsius_to_kelvin(21.8);
  double T_amb = celsius_to_kelvin(21.8);
  double R_gas = 8.31;    // J mol^-1 K^-1
  double A_freq = 3.1e98;  // s^-1
  double E_a = 6.28e5;    // J mol^-1
  double xi_max = 6e4;    // W K^-1 m^-3
  double mu_a_n = 50.0;   // m^-1
  double mu_a_c = 60.0;
  double mu_s_n = 8e3;
  double mu_s_c = 3e4;
  double g_n = 0.97;
  double g_c = 0.95;

  double rho_cp() const { return rho * cp; }
  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

struct OpticalState {
  double mu_a;  // m^-1
  double mu_s;  // m^-1
  double g;
  double D;  // m
};

struct OpticalDerivative {
  double dmu_a;  // d mu_a / d omega
  double dD;     // d D / d omega
};

/// delta = 1 - exp(-omega); 0 native, 1 fully coagulated.
double damage_fraction(double omega);

/// Optical coefficients blended between native and coagulated states.
OpticalState blended_optics(const TissueParams& p, double omega);
OpticalDerivative d_optics_d_omega(const TissueParams& p, double omega);

/// A exp(-E_a / (R T)), evaluated in log space. Zero for T <= 0.
double arrhenius_rate(const TissueParams& p, double T);
/// d/dT of arrhenius_rate.
double arrhenius_rate_derivative(const TissueParams& p, double T);

/// Effective laser power (W) reaching the tissue at time t.
double laser_power(const TissueParams& p, double t);

}  // namespace litt
