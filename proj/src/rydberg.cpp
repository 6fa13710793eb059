#include "qmetro/rydberg.hpp"

#include <cmath>

#include "qmetro/units.hpp"

namespace qmetro {

void InteractionParams::validate() const {
  if (cdd_mhz_um3 <= 0.0) throw ValidationError("InteractionParams: C_dd must be > 0");
  if (delta_def_mhz == 0.0) throw ValidationError("InteractionParams: defect must be nonzero");
}

InteractionParams control_register_interaction_defaults() { return {2.92e4, -196.0}; }
InteractionParams register_register_interaction_defaults() { return {2.84e4, -613.0}; }

double pair_shift_mhz(double r_um, const InteractionParams& p) {
  p.validate();
  if (!(r_um > 0.0)) throw ValidationError("pair_shift: distance must be positive");
  if (r_um < pair_distance_floor_um)
    throw ModelRangeError("pair_shift: distance below contact floor (sampling pathology)");
  const double d = p.delta_def_mhz;
  const double sgn = d > 0.0 ? 1.0 : -1.0;
  const double r3 = r_um * r_um * r_um;
  const double c_over_r3 = p.cdd_mhz_um3 / r3;
  return 0.5 * (d - sgn * std::sqrt(d * d + 4.0 * c_over_r3 * c_over_r3));
}

double r_max_um(const InteractionParams& p) {
  p.validate();
  return std::cbrt(2.0 * p.cdd_mhz_um3 / std::abs(p.delta_def_mhz));
}

void PulseParams::validate() const {
  if (delta_e_rad_per_s <= 0.0) throw ValidationError("PulseParams: Delta_e must be > 0");
  if (tau_s <= 0.0) throw ValidationError("PulseParams: tau must be > 0");
}

double omega2_peak_rad_per_s(const PulseParams& p, double amplitude_scale) {
  p.validate();
  return amplitude_scale * std::sqrt(8.0 * p.delta_e_rad_per_s / (3.0 * p.tau_s));
}

double omega2_rad_per_s(double t_s, const PulseParams& p, double amplitude_scale) {
  p.validate();
  if (t_s < 0.0 || t_s > p.tau_s) return 0.0;
  const double s = std::sin(units::pi * t_s / p.tau_s);
  return omega2_peak_rad_per_s(p, amplitude_scale) * s * s;
}

double omega3_rad_per_s(const PulseParams& p) {
  p.validate();
  return 10.0 * std::sqrt(4.0 * p.delta_e_rad_per_s / (3.0 * p.tau_s));
}

double omega2_square_integral(const PulseParams& p, double amplitude_scale) {
  // integral of sin^4 over one period is 3 tau / 8
  const double peak = omega2_peak_rad_per_s(p, amplitude_scale);
  return peak * peak * 3.0 * p.tau_s / 8.0;
}

}  // namespace qmetro
