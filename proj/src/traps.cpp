#include "qmetro/traps.hpp"

#include <cmath>

#include "qmetro/units.hpp"

namespace qmetro {

void TrapGeometry::validate() const {
  for (double w : widths_um)
    if (!(w > 0.0)) throw ValidationError("TrapGeometry: widths must be > 0");
  for (double c : center_um)
    if (!std::isfinite(c)) throw ValidationError("TrapGeometry: center must be finite");
}

void LossModel::validate() const {
  if (beta_cm3_per_s < 0.0 || tau_sp_s < 0.0 || vacuum_lifetime_s < 0.0)
    throw ValidationError("LossModel: rates must be non-negative");
}

std::vector<Vec3> sample_positions(const TrapGeometry& g, int n, RngStream& rng) {
  g.validate();
  if (n < 0) throw ValidationError("sample_positions: n < 0");
  std::vector<Vec3> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec3 r;
    for (int a = 0; a < 3; ++a) r[a] = g.center_um[a] + g.widths_um[a] * rng.gaussian();
    out.push_back(r);
  }
  return out;
}

double two_body_loss_rate_per_s(int n_register, const TrapGeometry& g, const LossModel& m) {
  g.validate();
  m.validate();
  if (n_register < 0) throw ValidationError("two_body_loss_rate: N < 0");
  if (n_register < 2) return 0.0;
  const double sx = units::um_to_cm(g.widths_um[0]);
  const double sy = units::um_to_cm(g.widths_um[1]);
  const double sz = units::um_to_cm(g.widths_um[2]);
  const double n = double(n_register);
  return m.beta_cm3_per_s * n * (n - 1.0) / (8.0 * std::pow(units::pi, 1.5) * sx * sy * sz);
}

double no_loss_probability(int n_register, double t_s, double gamma2_per_s) {
  if (t_s < 0.0) throw ValidationError("no_loss_probability: t < 0");
  if (gamma2_per_s < 0.0) throw ValidationError("no_loss_probability: gamma2 < 0");
  return std::exp(-double(n_register) * t_s * gamma2_per_s);
}

double peak_density_per_cm3(int n_register, const TrapGeometry& g) {
  g.validate();
  if (n_register < 0) throw ValidationError("peak_density: N < 0");
  const double sx = units::um_to_cm(g.widths_um[0]);
  const double sy = units::um_to_cm(g.widths_um[1]);
  const double sz = units::um_to_cm(g.widths_um[2]);
  return double(n_register) / (std::pow(units::two_pi, 1.5) * sx * sy * sz);
}

int poisson_load(double mean, RngStream& rng) { return rng.poisson(mean); }

double single_atom_loss_rate_per_s(const LossModel& m) {
  m.validate();
  double r = 0.0;
  if (m.tau_sp_s > 0.0) r += 1.0 / m.tau_sp_s;
  if (m.vacuum_lifetime_s > 0.0) r += 1.0 / m.vacuum_lifetime_s;
  return r;
}

WidthEstimate harmonic_width_estimate(double waist_um, double depth_mk, double temperature_uk,
                                      double wavelength_um) {
  if (waist_um <= 0.0 || depth_mk <= 0.0 || temperature_uk < 0.0 || wavelength_um <= 0.0)
    throw ValidationError("harmonic_width_estimate: inputs must be positive");
  // ratio k_B T / U_0 with U_0 expressed as a temperature
  const double ratio = units::uk_to_k(temperature_uk) / units::mk_to_k(depth_mk);
  WidthEstimate e;
  e.radial_um = 0.5 * waist_um * std::sqrt(ratio);
  // axial curvature of a Gaussian beam: U(z) = U0 / (1 + (z/zR)^2)
  const double rayleigh_um = units::pi * waist_um * waist_um / wavelength_um;
  e.axial_um = rayleigh_um / std::sqrt(2.0) * std::sqrt(ratio);
  e.approximate = true;
  return e;
}

}  // namespace qmetro
