#pragma once

#include "qmetro/experiment.hpp"

namespace qmetro {

enum class FringeModel { cosine, binomial_mixture, poisson_envelope };

// Fitted fringe sigma_z(omega); the model frequency n_eff is held fixed
// (register size for fixed-N data, p_r * mean for Poisson-loaded data).
struct FringeFit {
  FringeModel model = FringeModel::cosine;
  double contrast = 0.0;
  double phase = 0.0;   // rad
  double offset = 0.0;  // cosine model only
  double n_eff = 0.0;
  double p_r = 1.0;           // mixture/envelope models
  double mean_n = 0.0;        // envelope model
  double center_rad_per_s = 0.0;
  double t_s = 0.0;
  double residual_rms = 0.0;
  double contrast_stderr = 0.0;
  bool converged = false;
  bool low_contrast = false;  // contrast within noise of zero
};

struct FitOptions {
  double n_eff = 0.0;  // 0 = derive from the dataset
  int max_iterations = 300;
  double tol = 1e-12;
};

FringeFit fit_fringe(const FringeDataset& data, FringeModel model, const FitOptions& opts = {});

// fitted-model fringe and derivative with respect to omega
double fit_model_value(const FringeFit& fit, double omega_rad_per_s);
double fit_model_derivative(const FringeFit& fit, double omega_rad_per_s);

// Fisher information of the fitted two-outcome control distribution,
// F = (d sigma_z / d omega)^2 / (1 - sigma_z^2)
double numerical_fisher(const FringeFit& fit, double omega_rad_per_s);

struct OperatingPoint {
  double omega_ad = 0.0;  // offset from the supplied guess
  double omega = 0.0;
  double fisher = 0.0;
};

// Offset placing omega at the maximal-Fisher point adjacent to the guess
// (search bracket: one model fringe period around the guess).
OperatingPoint operating_point(const FringeFit& fit, double omega_guess);

struct SensitivityReport {
  double s_q = 0.0;    // quantum-device delta omega / omega, per shot
  double s_c = 0.0;    // classical reference 1/(omega t sqrt(N))
  double ratio = 0.0;  // s_c / s_q
  double fisher = 0.0;
  int nu_convention = 1;  // reported per single shot
};

SensitivityReport sensitivity_report(double fisher, double omega0_rad_per_s, double t_s,
                                     double mean_n);

// Purity crossover on the Poisson-averaged control-only fringe: smallest p_r
// whose best grid-point Fisher (units of t^2) reaches the target. The search
// grid mirrors a discretely sampled t-scan over theta in (0, theta_span].
struct CrossoverOptions {
  int grid_points = 128;
  double theta_span = 4.0 * units::pi;
  double contrast = 1.0;  // extra fringe contrast factor (losses, gates)
  double p_c = 1.0;
};

double best_gridpoint_fisher_per_t2(double mean_n, double p_r, const CrossoverOptions& opts);
double minimal_matching_purity(double mean_n, double target_fisher_per_t2,
                               const CrossoverOptions& opts = {});

}  // namespace qmetro
