#pragma once

#include <array>
#include <vector>

#include "qmetro/errors.hpp"
#include "qmetro/rng.hpp"

namespace qmetro {

using Vec3 = std::array<double, 3>;

// Gaussian atomic position distribution of one dipole trap. Widths are the
// standard deviations of the thermal density along each axis.
struct TrapGeometry {
  Vec3 widths_um{1.73, 1.58, 0.19};
  Vec3 center_um{0.0, 0.0, 0.0};
  double temperature_uk = 100.0;   // metadata
  double depth_mk = 1.0;           // metadata
  Vec3 waists_um{1.2, 10.0, 0.0};  // metadata

  void validate() const;
};

struct LossModel {
  double beta_cm3_per_s = 0.25e-12;  // light-induced two-body loss constant
  double tau_sp_s = 3.3;             // spontaneous-Raman timescale
  double vacuum_lifetime_s = 60.0;

  void validate() const;
};

std::vector<Vec3> sample_positions(const TrapGeometry& g, int n, RngStream& rng);

// gamma_2 = beta N (N-1) / (8 pi^(3/2) s_x s_y s_z), returned as a positive
// loss rate in 1/s
double two_body_loss_rate_per_s(int n_register, const TrapGeometry& g, const LossModel& m);

// exp(-N t gamma_2)
double no_loss_probability(int n_register, double t_s, double gamma2_per_s);

// peak density N / ((2 pi)^(3/2) s_x s_y s_z) in atoms/cm^3
double peak_density_per_cm3(int n_register, const TrapGeometry& g);

int poisson_load(double mean, RngStream& rng);

// combined single-atom survival channel (spontaneous Raman + vacuum)
double single_atom_loss_rate_per_s(const LossModel& m);

// Harmonic-approximation width estimate from beam parameters; advisory only,
// the quoted trap widths are the primary inputs.
struct WidthEstimate {
  double radial_um = 0.0;
  double axial_um = 0.0;
  bool approximate = true;
};

WidthEstimate harmonic_width_estimate(double waist_um, double depth_mk, double temperature_uk,
                                      double wavelength_um);

}  // namespace qmetro
