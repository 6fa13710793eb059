#pragma once

#include <cmath>

// Unit conventions used throughout:
//   - internal angular frequencies and rates in rad/s unless a name says otherwise
//   - Rydberg pair interactions in MHz (plain, not angular) and distances in um,
//     converted to rad/s only at the engine boundary
//   - config files carry frequencies in Hz (suffix _hz) and decay/dephasing
//     rates in 1/s (suffix _per_s); times in seconds, lengths in um

namespace qmetro::units {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// physical constants
inline constexpr double hbar_J_s = 1.054571817e-34;
inline constexpr double k_boltzmann_J_per_K = 1.380649e-23;
inline constexpr double mass_rb87_kg = 1.45e-25;
inline constexpr double g_earth_m_per_s2 = 9.81;

inline double hz_to_rad_per_s(double f_hz) { return two_pi * f_hz; }
inline double rad_per_s_to_hz(double w) { return w / two_pi; }
inline double mhz_to_rad_per_s(double f_mhz) { return two_pi * 1.0e6 * f_mhz; }
inline double rad_per_s_to_mhz(double w) { return w / (two_pi * 1.0e6); }

inline double um_to_cm(double x_um) { return x_um * 1.0e-4; }
inline double um3_to_cm3(double v_um3) { return v_um3 * 1.0e-12; }

inline double uk_to_k(double t_uk) { return t_uk * 1.0e-6; }
inline double mk_to_k(double t_mk) { return t_mk * 1.0e-3; }

}  // namespace qmetro::units
