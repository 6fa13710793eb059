#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "qmetro/errors.hpp"

namespace qmetro {

// Initial-state purity parameters of Eq.-(1)-style mixtures,
// rho = (1+p)/2 |0><0| + (1-p)/2 |1><1| per qubit.
struct NoiseParams {
  double p_c = 1.0;  // control purity, in [0, 1]
  double p_r = 1.0;  // per-register-qubit purity, in [0, 1]

  void validate() const;
};

struct ProtocolConfig {
  int n_register = 1;              // register size N_R >= 0
  double omega_rad_per_s = 1.0;    // coupling parameter to estimate
  double t_s = 1.0;                // interaction time
  int nu = 1;                      // repetitions per scan point

  void validate() const;
};

// Joint outcome table P_{k,n}: control outcome k in {0,1}, n register qubits
// found in |1>.
struct OutcomeDistribution {
  int n_register = 0;
  std::vector<double> p0;  // index n = 0..N_R
  std::vector<double> p1;

  double sum() const;
  // flattened [p0..., p1...] view used by the Fisher machinery
  std::vector<double> flattened() const;
};

// weight of the n-flip sector: C(N,n) (1+p)^(N-n) (1-p)^n / 2^N
double binomial_mixture_weight(int n_register, int n, double p_r);

OutcomeDistribution outcome_probabilities(const ProtocolConfig& cfg, const NoiseParams& noise);

// (P0, P1) of the control-only measurement
std::pair<double, double> control_marginals(const ProtocolConfig& cfg, const NoiseParams& noise);

// Fisher information of a parameterized discrete distribution,
// F(w) = sum_i (d_w P_i)^2 / P_i.
struct FisherOptions {
  double rel_step = 1e-6;        // central-difference step = max(rel_step*|w|, min_step)
  double min_step = 1e-9;        // rad/s
  double prob_floor = 1e-15;     // outcomes below the floor are excluded
  bool throw_if_degenerate = true;
};

using ProbabilityFamily = std::function<std::vector<double>(double omega)>;

double fisher_information(const ProbabilityFamily& family, double omega,
                          const FisherOptions& opts = {});

// variant with a caller-supplied analytic derivative (cross-check / exact path)
double fisher_information(const ProbabilityFamily& family,
                          const ProbabilityFamily& derivative, double omega,
                          const FisherOptions& opts = {});

// probability families over omega for the protocol distributions
ProbabilityFamily full_distribution_family(ProtocolConfig cfg, NoiseParams noise);
ProbabilityFamily control_only_family(ProtocolConfig cfg, NoiseParams noise);

// Closed form F = [(1-p_r^2) N + p_r^2 N^2] t^2; assumes a pure control
// (p_c = 1) and measurement of the full distribution.
double fisher_closed_form(int n_register, double p_r, double t_s);

// per-protocol-run sensitivity delta_omega/omega = 1/(omega sqrt(nu F))
double sensitivity(double fisher, int nu, double omega_rad_per_s);

// Poisson-loading average sum_m e^-mean mean^m/m! f(m), truncated where the
// omitted tail mass is < tail_bound. truncation < 0 selects the default
// mean + 12 sqrt(mean).
struct PoissonAverageOptions {
  int truncation = -1;
  double tail_bound = 1e-12;
};

double poisson_average(double mean, const std::function<double(int)>& fringe,
                       const PoissonAverageOptions& opts = {});

// Poisson-averaged fringe oscillation for register purity p_r at per-atom
// phase theta = omega t (control-only signal, p_c = 1):
//   Phi(theta) = e^{mean (cos theta - 1)} cos(mean p_r sin theta)
// The pure case p_r = 1 is the closed-form resummation of the e^-N sum.
double poisson_fringe_closed_form(double mean, double p_r, double theta);
double poisson_fringe_derivative(double mean, double p_r, double theta);  // d/dtheta

// the truncated series e^-mean sum_m mean^m cos(m theta)/m! (pure case)
double poisson_pure_fringe_series(double mean, double theta,
                                  const PoissonAverageOptions& opts = {});

// Control-only two-outcome Fisher (per t^2) of the Poisson-averaged fringe at
// per-atom phase theta: F = p_c^2 Phi'^2 / (1 - p_c^2 Phi^2), with an optional
// contrast prefactor multiplying p_c.
double poisson_control_fisher_per_t2(double mean, double p_r, double p_c, double theta,
                                     double contrast = 1.0);

}  // namespace qmetro
