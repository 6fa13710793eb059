#include <doctest.h>

#include <cmath>

#include "qmetro/rng.hpp"
#include "qmetro/rydberg.hpp"
#include "qmetro/traps.hpp"
#include "qmetro/units.hpp"

using namespace qmetro;

TEST_CASE("pair shift: reference value, asymptotics, sign, monotonicity") {
  const InteractionParams cr = control_register_interaction_defaults();
  CHECK(pair_shift_mhz(6.0, cr) == doctest::Approx(68.970).epsilon(1e-3));
  CHECK(std::abs(pair_shift_mhz(500.0, cr)) < 1e-3);  // asymptotic decoupling

  // r^-3 asymptote within 5% below 0.3 r_max
  const double rmax = r_max_um(cr);
  for (double r : {0.3 * rmax, 0.15 * rmax, 0.08}) {
    const double v = pair_shift_mhz(r, cr);
    const double asym = cr.cdd_mhz_um3 / (r * r * r);  // -sgn(defect) C/r^3, defect < 0
    CHECK(std::abs(v - asym) / asym < 0.05);
  }

  double prev = 1e300;
  for (double r = 0.2; r < 40.0; r *= 1.3) {
    const double v = pair_shift_mhz(r, cr);
    CHECK(v > 0.0);  // sign opposite to the (negative) defect
    CHECK(std::abs(v) < prev);
    prev = std::abs(v);
  }

  // crossover consistency: the r^-3 and r^-6 branches agree within 2x at r_max
  const double v_at_rmax = std::abs(pair_shift_mhz(rmax, cr));
  const double r3 = cr.cdd_mhz_um3 / (rmax * rmax * rmax);
  const double r6 = 2.0 * cr.cdd_mhz_um3 * cr.cdd_mhz_um3 /
                    (std::abs(cr.delta_def_mhz) * std::pow(rmax, 6.0));
  CHECK(v_at_rmax / r3 < 2.0);
  CHECK(r3 / v_at_rmax < 2.0);
  CHECK(v_at_rmax / r6 < 2.0);

  CHECK_THROWS_AS(pair_shift_mhz(0.01, cr), ModelRangeError);
  CHECK_THROWS_AS(pair_shift_mhz(-1.0, cr), ValidationError);
}

TEST_CASE("r_max: crossover ranges from the quoted channel constants") {
  // The formula values below do not reproduce the ranges quoted alongside the
  // same constants in the source material (8.1 um and about 5.7 um); the
  // formula is implemented as printed and these are its values.
  CHECK(r_max_um(control_register_interaction_defaults()) ==
        doctest::Approx(6.679).epsilon(1e-3));
  CHECK(r_max_um(register_register_interaction_defaults()) ==
        doctest::Approx(4.524).epsilon(1e-3));
  InteractionParams p = control_register_interaction_defaults();
  const double r1 = r_max_um(p);
  p.cdd_mhz_um3 *= 2.0;
  CHECK(r_max_um(p) == doctest::Approx(r1 * std::cbrt(2.0)).epsilon(1e-12));
}

TEST_CASE("pulse shapes") {
  PulseParams p;
  p.delta_e_rad_per_s = units::mhz_to_rad_per_s(1000.0);
  p.tau_s = 0.5e-6;

  CHECK(omega2_rad_per_s(0.0, p, 1.0) == 0.0);
  CHECK(omega2_rad_per_s(p.tau_s, p, 1.0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(omega2_rad_per_s(-1e-9, p, 1.0) == 0.0);
  CHECK(omega2_rad_per_s(p.tau_s / 2.0, p, 2.5) ==
        doctest::Approx(2.5 * std::sqrt(8.0 * p.delta_e_rad_per_s / (3.0 * p.tau_s)))
            .epsilon(1e-12));

  // pulse-area invariant: integral of Omega_2^2 equals Delta_e at unit scale
  CHECK(omega2_square_integral(p, 1.0) == doctest::Approx(p.delta_e_rad_per_s).epsilon(1e-12));
  double quad = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) * p.tau_s / n;
    const double w = omega2_rad_per_s(t, p, 1.0);
    quad += w * w * p.tau_s / n;
  }
  CHECK(quad == doctest::Approx(p.delta_e_rad_per_s).epsilon(1e-6));

  CHECK(units::rad_per_s_to_mhz(omega3_rad_per_s(p)) == doctest::Approx(206.0).epsilon(2e-3));
  CHECK(omega3_rad_per_s(p) / omega2_rad_per_s(p.tau_s / 2.0, p, 1.0) ==
        doctest::Approx(10.0 / std::sqrt(2.0)).epsilon(1e-12));
  // blockade comparison scale Omega_3^2 / (4 Delta_e)
  const double w3 = omega3_rad_per_s(p);
  CHECK(units::rad_per_s_to_mhz(w3 * w3 / (4.0 * p.delta_e_rad_per_s)) ==
        doctest::Approx(10.6).epsilon(1e-2));
  PulseParams p4 = p;
  p4.tau_s *= 4.0;
  CHECK(omega3_rad_per_s(p4) == doctest::Approx(0.5 * w3).epsilon(1e-12));
}

TEST_CASE("position sampling statistics") {
  TrapGeometry g;
  g.widths_um = {1.73, 1.58, 0.19};
  g.center_um = {2.0, -1.0, 0.5};
  RngStream rng(123);
  CHECK(sample_positions(g, 0, rng).empty());

  const int n = 100000;
  const auto pts = sample_positions(g, n, rng);
  for (int a = 0; a < 3; ++a) {
    double m = 0.0, v = 0.0, s3 = 0.0, s4 = 0.0;
    for (const auto& p : pts) m += p[a];
    m /= n;
    for (const auto& p : pts) {
      const double d = p[a] - m;
      v += d * d;
      s3 += d * d * d;
      s4 += d * d * d * d;
    }
    v /= n;
    const double sd = std::sqrt(v);
    s3 /= n * sd * sd * sd;
    s4 = s4 / (n * v * v) - 3.0;
    CHECK(std::abs(m - g.center_um[a]) < 4.0 * g.widths_um[a] / std::sqrt(double(n)));
    CHECK(sd == doctest::Approx(g.widths_um[a]).epsilon(0.02));
    // moment-based normality: skew and excess kurtosis within 3 sigma
    CHECK(std::abs(s3) < 3.0 * std::sqrt(6.0 / n));
    CHECK(std::abs(s4) < 3.0 * std::sqrt(24.0 / n));
  }
}

TEST_CASE("two-body loss rate and survival") {
  TrapGeometry g;
  g.widths_um = {1.73, 1.58, 0.19};
  LossModel loss;

  CHECK(two_body_loss_rate_per_s(0, g, loss) == 0.0);
  CHECK(two_body_loss_rate_per_s(1, g, loss) == 0.0);
  const double g2 = two_body_loss_rate_per_s(25, g, loss);
  CHECK(g2 == doctest::Approx(6.4834).epsilon(1e-3));
  CHECK(g2 == doctest::Approx(6.47).epsilon(0.01));

  TrapGeometry wide = g;
  for (auto& w : wide.widths_um) w *= 2.0;
  CHECK(two_body_loss_rate_per_s(25, wide, loss) == doctest::Approx(g2 / 8.0).epsilon(1e-12));

  const double g2_2 = two_body_loss_rate_per_s(2, g, loss);
  for (int n : {3, 7, 25})
    CHECK(two_body_loss_rate_per_s(n, g, loss) / g2_2 ==
          doctest::Approx(n * (n - 1) / 2.0).epsilon(1e-12));

  CHECK(no_loss_probability(25, 0.0, g2) == 1.0);
  CHECK(no_loss_probability(25, 375e-6, 6.47) == doctest::Approx(0.9411).epsilon(1e-3));
  CHECK(no_loss_probability(25, 375e-6, 0.0) == 1.0);
  double prev = 1.0;
  for (int n : {1, 5, 10, 25, 40}) {
    const double p = no_loss_probability(n, 375e-6, two_body_loss_rate_per_s(n, g, loss));
    CHECK(p <= prev);
    prev = p;
  }
}

TEST_CASE("peak density") {
  TrapGeometry g;
  g.widths_um = {1.73, 1.58, 0.19};
  CHECK(peak_density_per_cm3(0, g) == 0.0);
  const double d1 = peak_density_per_cm3(1, g);
  CHECK(d1 == doctest::Approx(1.2226e11).epsilon(1e-3));
  CHECK(d1 == doctest::Approx(1.24e11).epsilon(0.02));
  CHECK(peak_density_per_cm3(25, g) == doctest::Approx(25.0 * d1).epsilon(1e-12));
}

TEST_CASE("harmonic width estimate") {
  const auto w0 = harmonic_width_estimate(1.0, 1.0, 0.0, 0.825);
  CHECK(w0.radial_um == 0.0);
  const auto w1 = harmonic_width_estimate(1.0, 1.0, 100.0, 0.825);
  const auto w4 = harmonic_width_estimate(1.0, 1.0, 400.0, 0.825);
  CHECK(w4.radial_um == doctest::Approx(2.0 * w1.radial_um).epsilon(1e-12));
  // harmonic estimate for the control trap; the trap widths used elsewhere
  // are direct inputs because this estimate does not reproduce them
  CHECK(w1.radial_um == doctest::Approx(0.158).epsilon(1e-2));
  CHECK(w1.approximate);
}

TEST_CASE("single-atom survival channel") {
  LossModel m;
  CHECK(single_atom_loss_rate_per_s(m) == doctest::Approx(1.0 / 3.3 + 1.0 / 60.0).epsilon(1e-12));
}
