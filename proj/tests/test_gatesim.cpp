#include <doctest.h>

#include <cmath>

#include "qmetro/gatesim.hpp"
#include "qmetro/units.hpp"

using namespace qmetro;

namespace {

GateJob single_atom_job(double v_cr_mhz, double gamma_e, double gamma_dph,
                        double amplitude_scale = kCalibratedAmplitudeScale,
                        double omega3_scale = 1.0) {
  GateJob job;
  job.scheme.delta_e_rad_per_s = units::mhz_to_rad_per_s(1000.0);
  job.scheme.gamma_e_per_s = gamma_e;
  job.scheme.gamma_dph_per_s = gamma_dph;
  job.n_register = 1;
  job.pulses.pulse.delta_e_rad_per_s = job.scheme.delta_e_rad_per_s;
  job.pulses.pulse.tau_s = 0.5e-6;
  job.pulses.amplitude_scale = amplitude_scale;
  job.pulses.omega3_scale = omega3_scale;
  job.v.v_control_register = Eigen::VectorXd::Constant(1, units::mhz_to_rad_per_s(v_cr_mhz));
  job.v.v_register_register = Eigen::MatrixXd::Zero(1, 1);
  return job;
}

}  // namespace

TEST_CASE("interactions from positions") {
  const Vec3 c{0.0, 0.0, 0.0};
  const std::vector<Vec3> regs{{6.0, 0.0, 0.0}, {6.0, 3.0, 0.0}};
  const GateInteractions v = interactions_from_positions(
      c, regs, control_register_interaction_defaults(), register_register_interaction_defaults());
  CHECK(units::rad_per_s_to_mhz(v.v_control_register(0)) == doctest::Approx(68.970).epsilon(1e-3));
  CHECK(v.v_register_register(0, 1) == v.v_register_register(1, 0));
  CHECK(v.v_register_register(0, 0) == 0.0);
  const double expect_rr =
      pair_shift_mhz(3.0, register_register_interaction_defaults());
  CHECK(units::rad_per_s_to_mhz(v.v_register_register(0, 1)) ==
        doctest::Approx(expect_rr).epsilon(1e-9));
}

TEST_CASE("amplitude calibration hits the pi flip") {
  PulseParams pulse;
  pulse.delta_e_rad_per_s = units::mhz_to_rad_per_s(1000.0);
  pulse.tau_s = 0.5e-6;
  const CalibrationResult cal = calibrate_amplitude_scale(pulse, 2.2, 2.9, MagnusOptions{512});
  CHECK(cal.transfer >= 0.99);
  CHECK(cal.amplitude_scale == doctest::Approx(kCalibratedAmplitudeScale).epsilon(2e-3));
  // the adiabatic-elimination estimate sqrt(2 pi) locates the same region
  CHECK(cal.amplitude_scale == doctest::Approx(std::sqrt(2.0 * units::pi)).epsilon(0.01));
}

TEST_CASE("blockade-lifted transfer and EIT blocking") {
  // lifted limit emulated by switching the coupling laser off
  GateJob lifted = single_atom_job(0.0, 0.0, 0.0, kCalibratedAmplitudeScale, 0.0);
  CHECK(sector_transfer_probability(lifted, ControlSector::ground, MagnusOptions{512}) >= 0.99);

  // EIT condition intact (no Rydberg shift): the flip is blocked
  GateJob blocked = single_atom_job(0.0, 0.0, 0.0);
  CHECK(sector_transfer_probability(blocked, ControlSector::ground, MagnusOptions{512}) <= 0.01);

  // conditional branch at a typical distance: flip proceeds
  GateJob typical = single_atom_job(3553.0, 0.0, 0.0);
  CHECK(sector_transfer_probability(typical, ControlSector::rydberg, MagnusOptions{512}) >= 0.99);

  // far atom: the Rydberg shift is too weak to lift the EIT fully
  const double v_far = pair_shift_mhz(9.0, control_register_interaction_defaults());
  GateJob far = single_atom_job(v_far, 0.0, 0.0);
  CHECK(sector_transfer_probability(far, ControlSector::rydberg, MagnusOptions{512}) <= 0.9);
}

TEST_CASE("magnus propagation agrees with the rk45 reference") {
  // dissipative single-atom conditional branch
  GateJob job = single_atom_job(800.0, 6.065e6, 1e5);
  MatC e00 = MatC::Zero(4, 4);
  e00(0, 0) = 1.0;
  const MatC m = propagate_sector(e00, job, ControlSector::rydberg, MagnusOptions{512});
  IntegratorOptions ropts;
  ropts.rtol = 1e-9;
  ropts.atol = 1e-11;
  const MatC r = propagate_sector_rk45(e00, job, ControlSector::rydberg, ropts);
  CHECK((m - r).cwiseAbs().maxCoeff() < 3e-6);

  // blocked sector with both dissipation channels
  const MatC mb = propagate_sector(e00, job, ControlSector::ground, MagnusOptions{512});
  const MatC rb = propagate_sector_rk45(e00, job, ControlSector::ground, ropts);
  CHECK((mb - rb).cwiseAbs().maxCoeff() < 3e-6);
}

TEST_CASE("pauli decomposition") {
  Eigen::Matrix2cd sx;
  sx << 0, 1, 1, 0;
  const PauliFit fx = pauli_fit(sx);
  CHECK(std::abs(fx.a - Cplx(1, 0)) < 1e-14);
  CHECK(std::abs(fx.b) < 1e-14);
  CHECK(std::abs(fx.c) < 1e-14);
  CHECK(fx.theta == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(fx.residual == doctest::Approx(0.0).epsilon(1e-14));

  // flip with an extra conditional phase: a - ib = e^{-i theta}
  const double theta = 0.37;
  Eigen::Matrix2cd u;
  u << 0.0, std::exp(Cplx(0, -theta)), std::exp(Cplx(0, theta)), 0.0;
  const PauliFit fu = pauli_fit(u);
  CHECK(fu.theta == doctest::Approx(theta).epsilon(1e-12));
  CHECK(fu.abs_a_minus_ib == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conditional map extraction: ideal flip limit") {
  GateJob job = single_atom_job(0.0, 0.0, 0.0, kCalibratedAmplitudeScale, 0.0);
  const ConditionalMapResult res = conditional_qubit_map(job, MagnusOptions{512});
  CHECK(res.transfer >= 0.99);
  CHECK(res.kraus_weight >= 0.999);
  CHECK(res.fit.abs_a_minus_ib == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(std::abs(res.fit.c) < 0.02);
  CHECK(res.fit.residual < kConditionalFitResidualLimit);
  CHECK(res.leakage < 1e-3);
}

TEST_CASE("conditional map extraction: weak interaction flags a non-flip") {
  const double v_far = pair_shift_mhz(12.0, control_register_interaction_defaults());
  GateJob job = single_atom_job(v_far, 0.0, 0.0);
  const ConditionalMapResult res = conditional_qubit_map(job, MagnusOptions{512});
  CHECK(res.transfer < 0.5);
  CHECK(std::abs(res.fit.c) > 0.3);  // dominated by the unflipped diagonal
}

TEST_CASE("cross-block record: unitarized factors and phase convention") {
  GateJob job = single_atom_job(3553.0, 0.0, 1e4);
  const GatePairRecord rec = cross_pair_record(job, MagnusOptions{512});
  // blocked branch is identity-like in the chosen gauge
  CHECK(rec.u_blocked(0, 0).real() > 0.99);
  CHECK(std::abs(rec.u_blocked(0, 1)) < 0.05);
  // lifted branch is a flip with a small conditional phase
  CHECK(std::abs(rec.u_lifted(1, 0)) > 0.99);
  CHECK(std::abs(rec.theta) < 0.3);
  CHECK(rec.amplitude > 0.9);
  // unitarity of the stored factors
  CHECK((rec.u_blocked.adjoint() * rec.u_blocked - Eigen::Matrix2cd::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((rec.u_lifted.adjoint() * rec.u_lifted - Eigen::Matrix2cd::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("cross-block scalar: control dephasing factor") {
  // with the register untouched (no drive), the cross block just decays at
  // the control |0> vs |x> dephasing rate gamma_dph / 2
  GateJob job = single_atom_job(0.0, 0.0, 2e5, 0.0, 0.0);
  MatC block = MatC::Zero(4, 4);
  block(0, 0) = 1.0;
  const MatC out = propagate_cross_block(block, job, MagnusOptions{64});
  const double expect = std::exp(-0.5 * 2e5 * 0.5e-6);
  CHECK(out(0, 0).real() == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("gate context validation") {
  GateJob job = single_atom_job(100.0, 0.0, 0.0);
  job.n_register = 4;
  CHECK_THROWS_AS(register_static_hamiltonian(job, ControlSector::ground), ValidationError);
}
