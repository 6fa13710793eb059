#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "qmetro/hilbert.hpp"
#include "qmetro/rydberg.hpp"

namespace qmetro {

// Level structure and dissipation rates shared by all atoms.
//
// Rate conventions: the drive/detuning frequencies (Delta_e, Omega_2/3) are
// angular (rad/s, explicit 2 pi). The Lindblad rates gamma_e and gamma_dph
// are plain inverse seconds of the quoted linewidth numbers; see README.
struct AtomLevelScheme {
  double delta_e_rad_per_s = 0.0;
  double gamma_e_per_s = 0.0;    // radiative decay constant of |e| terms
  double gamma_dph_per_s = 0.0;  // laser-linewidth dephasing on |1>, |e>, |x>
  bool rydberg_decay = false;    // optional loss-to-sink from |x>
  double gamma_ryd_per_s = 0.0;

  void validate() const;
};

struct PulseSchedule {
  PulseParams pulse;
  double amplitude_scale = 1.0;  // calibration factor on Omega_2
  double omega3_scale = 1.0;     // 0 emulates the fully-blockaded limit

  double omega2_at(double t_s) const { return omega2_rad_per_s(t_s, pulse, amplitude_scale); }
  double omega3() const { return omega3_scale * omega3_rad_per_s(pulse); }
};

// Dense density matrix of n_atoms four-level atoms; atom 0 is the control.
struct DensityMatrix {
  int n_atoms = 1;
  MatC rho;

  static DensityMatrix zero(int n_atoms);
  // product of per-atom qubit mixtures diag((1+p)/2, (1-p)/2, 0, 0)
  static DensityMatrix product_mixture(int n_atoms, double p_control, double p_register);

  double trace_defect() const;        // |tr rho - 1|
  double hermiticity_defect() const;  // max |rho - rho^dag|
  double min_eigenvalue() const;
  void check_invariants(double trace_tol = 1e-8, double herm_tol = 1e-10,
                        double eig_floor = -1e-7) const;
};

// H_T = sum_k H_k(t) + sum_{i<j} V_ij sigma_xx^i sigma_xx^j with
// H_k = Delta_e |e><e| + Omega_2(t)/2 (|0><e| + |1><e|) + Omega_3/2 |e><x| + h.c.
// Atoms with driven[k] = false contribute only their diagonal/interaction
// parts (used for the undriven control during register gates).
MatC build_hamiltonian(const AtomLevelScheme& scheme, int n_atoms,
                       const Eigen::MatrixXd& pair_shifts_rad_per_s, double t_s,
                       const PulseSchedule& pulses, const std::vector<bool>& driven = {});

MatC lindblad_rhs(const MatC& rho, const MatC& hamiltonian, const AtomLevelScheme& scheme,
                  int n_atoms);

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-9;
  double initial_step_s = 0.0;  // 0 = auto
  long max_steps = 40'000'000;
};

struct IntegrationReport {
  long steps = 0;
  long rejected = 0;
  double final_trace_defect = 0.0;
  double final_hermiticity_defect = 0.0;
  double final_min_eigenvalue = 0.0;
};

// Adaptive embedded Dormand-Prince 5(4) over a generic matrix ODE; used both
// for density matrices and for basis-operator (non-Hermitian) inputs.
using MatrixRhs = std::function<void(double t, const MatC& y, MatC& dy)>;
MatC integrate_matrix_ode(const MatrixRhs& rhs, MatC y0, double t0, double t1,
                          const IntegratorOptions& opts, IntegrationReport* report = nullptr);

// Gate evolution of the full system under the pulse window [0, tau].
DensityMatrix integrate(const DensityMatrix& rho0, const AtomLevelScheme& scheme,
                        const PulseSchedule& pulses, const Eigen::MatrixXd& pair_shifts_rad_per_s,
                        const IntegratorOptions& opts = {}, IntegrationReport* report = nullptr,
                        const std::vector<bool>& driven = {});

// perfect single-qubit unitaries of the protocol
DensityMatrix apply_hadamard_control(const DensityMatrix& in);
// free evolution: phase e^{-i omega t} on |1> of every register atom
DensityMatrix apply_free_evolution(const DensityMatrix& in, double omega_rad_per_s, double t_s);
// ideal pi pulse |1> <-> |x> on the control
DensityMatrix apply_control_rydberg_swap(const DensityMatrix& in);

struct ControlReduction {
  Eigen::Matrix2cd rho_control;  // renormalized over the qubit subspace
  double leakage = 0.0;          // population outside the all-qubit subspace
};

// Trace out register atoms; throws if leakage exceeds the threshold.
ControlReduction partial_trace_register(const DensityMatrix& in, double leakage_threshold = 0.05);

}  // namespace qmetro
