#pragma once

#include "qmetro/errors.hpp"

namespace qmetro {

// Strongest-pair Rydberg-Rydberg interaction channel. Units: C_dd in
// MHz um^3, defect in MHz (signed), distances in um.
struct InteractionParams {
  double cdd_mhz_um3 = 2.92e4;
  double delta_def_mhz = -196.0;

  void validate() const;
};

// defaults quoted for n=74 / n'=73 S states
InteractionParams control_register_interaction_defaults();
InteractionParams register_register_interaction_defaults();

// Pair energy shift V(r) = 1/2 (D - sgn(D) sqrt(D^2 + 4 C^2 / r^6)).
// Distances below the contact floor indicate a sampling pathology and throw.
inline constexpr double pair_distance_floor_um = 0.05;
double pair_shift_mhz(double r_um, const InteractionParams& p);

// r^-3 -> r^-6 crossover range (2 C / |D|)^(1/3)
double r_max_um(const InteractionParams& p);

// Raman / coupling laser pulse parameters.
struct PulseParams {
  double delta_e_rad_per_s = 0.0;  // intermediate-state detuning, > 0
  double tau_s = 0.0;              // gate duration, > 0

  void validate() const;
};

// Omega_2(t) = amplitude_scale * sqrt(8 Delta_e / 3 tau) sin^2(pi t / tau),
// zero outside [0, tau].
double omega2_rad_per_s(double t_s, const PulseParams& p, double amplitude_scale);
double omega2_peak_rad_per_s(const PulseParams& p, double amplitude_scale);

// Omega_3 = 10 sqrt(4 Delta_e / 3 tau)
double omega3_rad_per_s(const PulseParams& p);

// integral of Omega_2(t)^2 over the pulse; equals Delta_e at unit scale
double omega2_square_integral(const PulseParams& p, double amplitude_scale);

}  // namespace qmetro
