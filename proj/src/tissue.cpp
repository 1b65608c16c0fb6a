#include "litt/tissue.hpp"

#include <cmath>
#include <string>

#include "litt/errors.hpp"

namespace litt {

void TissueParams::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(std::string("tissue: ") + msg);
  };
  require(rho > 0 && cp > 0 && kappa > 0, "rho, cp and kappa must be positive");
  require(alpha_cool >= 0 && alpha_amb >= 0, "heat transfer coefficients must be nonnegative");
  require(beta_q >= 0 && beta_q < 1, "beta_q must lie in [0, 1)");
  require(q_hat_app >= 0, "q_hat_app must be nonnegative");
  require(g_n >= 0 && g_n < 1 && g_c >= 0 && g_c < 1, "anisotropy factors must lie in [0, 1)");
  require(mu_a_n > 0 && mu_a_c > 0, "absorption coefficients must be positive");
  require(mu_s_n >= 0 && mu_s_c >= 0, "scattering coefficients must be nonnegative");
  require(t_on < t_off && t_off <= tau_end, "need t_on < t_off <= tau_end");
  require(T0 > 0 && T_cool > 0 && T_b > 0 && T_amb > 0, "temperatures are in kelvin and must be positive");
  require(R_gas > 0 && A_freq > 0 && E_a > 0, "Arrhenius constants must be positive");
  require(xi_max >= 0, "xi_max must be nonnegative");
}

double damage_fraction(double omega) {
  if (omega < 0.0) throw InvalidArgument("damage_fraction: omega must be nonnegative");
  return -std::expm1(-omega);
}

OpticalState blended_optics(const TissueParams& p, double omega) {
  const double delta = damage_fraction(omega);
  OpticalState s{};
  s.mu_a = p.mu_a_n + delta * (p.mu_a_c - p.mu_a_n);
  s.mu_s = p.mu_s_n + delta * (p.mu_s_c - p.mu_s_n);
  s.g = p.g_n + delta * (p.g_c - p.g_n);
  s.D = 1.0 / (3.0 * (s.mu_a + s.mu_s * (1.0 - s.g)));
  return s;
}

OpticalDerivative d_optics_d_omega(const TissueParams& p, double omega) {
  const OpticalState s = blended_optics(p, omega);
  const double ddelta = std::exp(-omega);
  const double dmu_a = ddelta * (p.mu_a_c - p.mu_a_n);
  const double dmu_s = ddelta * (p.mu_s_c - p.mu_s_n);
  const double dg = ddelta * (p.g_c - p.g_n);
  const double dsum = dmu_a + dmu_s * (1.0 - s.g) - s.mu_s * dg;
  return {dmu_a, -3.0 * s.D * s.D * dsum};
}

double arrhenius_rate(const TissueParams& p, double T) {
  if (!(T > 0.0)) return 0.0;
  return std::exp(std::log(p.A_freq) - p.E_a / (p.R_gas * T));
}

double arrhenius_rate_derivative(const TissueParams& p, double T) {
  if (!(T > 0.0)) return 0.0;
  return arrhenius_rate(p, T) * p.E_a / (p.R_gas * T * T);
}

double laser_power(const TissueParams& p, double t) {
  return (t >= p.t_on && t <= p.t_off) ? (1.0 - p.beta_q) * p.q_hat_app : 0.0;
}

}  // namespace litt
