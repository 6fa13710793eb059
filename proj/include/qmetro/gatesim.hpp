#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "qmetro/lindblad.hpp"
#include "qmetro/rydberg.hpp"
#include "qmetro/traps.hpp"

namespace qmetro {

// Pair interactions for one gate application, in rad/s.
struct GateInteractions {
  Eigen::VectorXd v_control_register;  // per register atom
  Eigen::MatrixXd v_register_register;
};

GateInteractions interactions_from_positions(const Vec3& control_pos_um,
                                             const std::vector<Vec3>& register_pos_um,
                                             const InteractionParams& control_register,
                                             const InteractionParams& register_register);

// One gate application on n_register atoms. The control atom is not part of
// the register Hilbert space: it is excited by ideal pi pulses around the
// pulse window and enters only through the conditional Rydberg shifts and a
// scalar coherence factor.
struct GateJob {
  AtomLevelScheme scheme;
  PulseSchedule pulses;
  int n_register = 1;
  GateInteractions v;
};

enum class ControlSector { ground, rydberg };

// register-space Hamiltonian pieces: H(t) = A_sector + Omega_2(t)/2 * B
MatC register_static_hamiltonian(const GateJob& job, ControlSector sector);
MatC register_drive_structure(int n_register);

struct MagnusOptions {
  int steps = 512;  // uniform commutator-free 4th-order steps per pulse
};

// CPTP evolution of a register-space operator within one control sector.
// Accepts non-Hermitian inputs (basis operators) as well.
MatC propagate_sector(const MatC& rho_in, const GateJob& job, ControlSector sector,
                      const MagnusOptions& opts = {});

// Two-sided evolution of the control |0><x| coherence block: left factor from
// the ground-sector Hamiltonian, right factor from the Rydberg sector, plus
// register dissipators and the control dephasing scalar.
MatC propagate_cross_block(const MatC& block_in, const GateJob& job,
                           const MagnusOptions& opts = {});

// rk45 reference path for the same register-space dynamics (validation)
MatC propagate_sector_rk45(const MatC& rho_in, const GateJob& job, ControlSector sector,
                           const IntegratorOptions& opts = {},
                           double v_cap_rad_per_s = 0.0);

// Pauli decomposition K = alpha0 I + a sx + b sy + c sz, theta from
// a - i b = |a - i b| e^{-i theta}.
struct PauliFit {
  Cplx alpha0, a, b, c;
  double theta = 0.0;
  double abs_a_minus_ib = 0.0;
  double residual = 0.0;  // weight outside the traceless model, relative
};

PauliFit pauli_fit(const Eigen::Matrix2cd& k);

// Conditional (control-excited branch) register-qubit map of a single-atom
// gate, reduced to the qubit block.
struct ConditionalMapResult {
  Eigen::Matrix2cd kraus;     // dominant Kraus operator (unnormalized)
  double kraus_weight = 0.0;  // leading Choi eigenvalue / total
  double leakage = 0.0;       // mean population outside the qubit block
  PauliFit fit;               // raw Pauli decomposition of the Kraus operator
  double transfer = 0.0;      // |<1|K|0>|^2 population transfer of the map
};

ConditionalMapResult conditional_qubit_map(const GateJob& job, const MagnusOptions& opts = {});

// Fit residual above this value marks a non-unitary conditional channel.
inline constexpr double kConditionalFitResidualLimit = 0.05;

// Unitarized per-gate记 record for the factorized large-register model: the
// cross-block map is approximated as rho -> u_blocked rho u_lifted^dag with
// both factors polar-projected to unitaries (amplitudes reported separately).
struct GatePairRecord {
  Eigen::Matrix2cd u_blocked;
  Eigen::Matrix2cd u_lifted;
  double theta = 0.0;      // lifted-flip phase in the blocked-branch gauge
  double amplitude = 0.0;  // dominant two-sided singular weight (diagnostic)
};

GatePairRecord cross_pair_record(const GateJob& job, const MagnusOptions& opts = {});

// population transfer |0> -> |1> of a single register atom
double sector_transfer_probability(const GateJob& job, ControlSector sector,
                                   const MagnusOptions& opts = {});

// Raman pi-pulse amplitude calibration: maximizes the blockade-lifted
// transfer (Omega_3 off, dissipation off) over the amplitude scale.
struct CalibrationResult {
  double amplitude_scale = 0.0;
  double transfer = 0.0;
};

CalibrationResult calibrate_amplitude_scale(const PulseParams& pulse,
                                            double lo = 2.2, double hi = 2.9,
                                            const MagnusOptions& opts = {});

// value obtained from the calibration above at the default pulse parameters;
// stored so configs work out of the box (see the calibrate CLI command)
inline constexpr double kCalibratedAmplitudeScale = 2.5069;

}  // namespace qmetro
