#include "qmetro/estimation.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace qmetro {

namespace {

// model value at scan phase theta = omega t (per register atom)
double model_value_theta(const FringeFit& f, double theta) {
  switch (f.model) {
    case FringeModel::cosine:
      return f.contrast * std::cos(f.n_eff * theta + f.phase) + f.offset;
    case FringeModel::binomial_mixture: {
      const int n = int(std::lround(f.n_eff));
      double acc = 0.0;
      for (int k = 0; k <= n; ++k)
        acc += binomial_mixture_weight(n, k, f.p_r) *
               std::cos(double(n - 2 * k) * theta + double(n - 2 * k) * f.phase / double(n));
      return f.contrast * acc;
    }
    case FringeModel::poisson_envelope:
      return f.contrast * std::exp(f.mean_n * (std::cos(theta) - 1.0)) *
             std::cos(f.mean_n * f.p_r * std::sin(theta) + f.phase);
  }
  return 0.0;
}

double model_derivative_theta(const FringeFit& f, double theta) {
  switch (f.model) {
    case FringeModel::cosine:
      return -f.contrast * f.n_eff * std::sin(f.n_eff * theta + f.phase);
    case FringeModel::binomial_mixture: {
      const int n = int(std::lround(f.n_eff));
      double acc = 0.0;
      for (int k = 0; k <= n; ++k) {
        const double m = double(n - 2 * k);
        acc -= binomial_mixture_weight(n, k, f.p_r) * m *
               std::sin(m * theta + m * f.phase / double(n));
      }
      return f.contrast * acc;
    }
    case FringeModel::poisson_envelope: {
      const double env = std::exp(f.mean_n * (std::cos(theta) - 1.0));
      const double arg = f.mean_n * f.p_r * std::sin(theta) + f.phase;
      return f.contrast * env *
             (-f.mean_n * std::sin(theta) * std::cos(arg) -
              f.mean_n * f.p_r * std::cos(theta) * std::sin(arg));
    }
  }
  return 0.0;
}

struct ResidualEval {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
};

// parameters: cosine -> (contrast, phase, offset); others -> (contrast, phase)
ResidualEval eval_residuals(const FringeFit& base, const std::vector<double>& theta,
                            const std::vector<double>& y, const Eigen::VectorXd& params) {
  FringeFit f = base;
  f.contrast = params(0);
  f.phase = params(1);
  const bool has_offset = base.model == FringeModel::cosine;
  if (has_offset) f.offset = params(2);
  const int n = int(theta.size());
  ResidualEval ev;
  ev.r.resize(n);
  ev.jac.resize(n, params.size());
  const double dphi = 1e-7;
  for (int i = 0; i < n; ++i) {
    const double m = model_value_theta(f, theta[i]);
    ev.r(i) = m - y[i];
    // d/dcontrast: model is linear in contrast
    ev.jac(i, 0) = f.contrast != 0.0 ? (m - f.offset) / f.contrast
                                     : std::cos(f.n_eff * theta[i] + f.phase);
    FringeFit fp = f;
    fp.phase += dphi;
    ev.jac(i, 1) = (model_value_theta(fp, theta[i]) - m) / dphi;
    if (has_offset) ev.jac(i, 2) = 1.0;
  }
  return ev;
}

}  // namespace

FringeFit fit_fringe(const FringeDataset& data, FringeModel model, const FitOptions& opts) {
  if (data.points.size() < 5) throw ValidationError("fit_fringe: need at least 5 scan points");

  FringeFit fit;
  fit.model = model;
  fit.t_s = data.t_s;
  fit.center_rad_per_s = data.omega0_rad_per_s;
  fit.p_r = data.noise.p_r;
  fit.mean_n = data.mean_n_register;
  fit.n_eff = opts.n_eff;
  if (fit.n_eff <= 0.0) {
    fit.n_eff = model == FringeModel::poisson_envelope || data.mean_n_register > 3.5
                    ? data.noise.p_r * data.mean_n_register
                    : data.mean_n_register;
    if (model == FringeModel::binomial_mixture) fit.n_eff = data.mean_n_register;
  }

  std::vector<double> theta(data.points.size()), y(data.points.size());
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    theta[i] = data.omega0_rad_per_s * (1.0 + data.points[i].rel_detuning) * data.t_s;
    y[i] = data.points[i].sigma_z;
  }

  // initialization: contrast from the peak-to-peak spread, phase from a
  // coarse grid scan
  double ymin = y[0], ymax = y[0], ymean = 0.0;
  for (double v : y) {
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
    ymean += v;
  }
  ymean /= double(y.size());
  const bool has_offset = model == FringeModel::cosine;
  const int n_par = has_offset ? 3 : 2;
  Eigen::VectorXd params(n_par);
  params(0) = std::max(0.5 * (ymax - ymin), 1e-3);
  if (has_offset) params(2) = ymean;

  double best_phase = 0.0, best_cost = 1e300;
  for (int g = 0; g < 32; ++g) {
    const double ph = 2.0 * units::pi * double(g) / 32.0 - units::pi;
    FringeFit probe = fit;
    probe.contrast = params(0);
    probe.phase = ph;
    probe.offset = has_offset ? params(2) : 0.0;
    double cost = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double r = model_value_theta(probe, theta[i]) - y[i];
      cost += r * r;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_phase = ph;
    }
  }
  params(1) = best_phase;

  // damped Gauss-Newton (Levenberg style)
  double lambda = 1e-3;
  double prev_cost = best_cost;
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    FringeFit cur = fit;
    cur.contrast = params(0);
    cur.phase = params(1);
    if (has_offset) cur.offset = params(2);
    const ResidualEval ev = eval_residuals(fit, theta, y, params);
    const double cost = ev.r.squaredNorm();
    Eigen::MatrixXd h = ev.jac.transpose() * ev.jac;
    h.diagonal().array() += lambda * (h.diagonal().array().abs() + 1e-12);
    const Eigen::VectorXd step = h.ldlt().solve(-ev.jac.transpose() * ev.r);
    Eigen::VectorXd trial = params + step;
    FringeFit tf = fit;
    tf.contrast = trial(0);
    tf.phase = trial(1);
    if (has_offset) tf.offset = trial(2);
    double trial_cost = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double r = model_value_theta(tf, theta[i]) - y[i];
      trial_cost += r * r;
    }
    if (trial_cost <= cost) {
      params = trial;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (std::abs(cost - trial_cost) < opts.tol * (1.0 + cost)) {
        converged = true;
        prev_cost = trial_cost;
        break;
      }
      prev_cost = trial_cost;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }

  fit.contrast = std::abs(params(0));
  fit.phase = params(1);
  if (params(0) < 0.0) fit.phase += units::pi;  // canonical positive contrast
  if (has_offset) fit.offset = params(2);
  fit.converged = converged;
  fit.residual_rms = std::sqrt(prev_cost / double(y.size()));

  // rough contrast uncertainty from the residual level
  fit.contrast_stderr = fit.residual_rms * std::sqrt(2.0 / double(y.size()));
  fit.low_contrast = fit.contrast < 3.0 * fit.contrast_stderr;
  return fit;
}

double fit_model_value(const FringeFit& fit, double omega_rad_per_s) {
  return model_value_theta(fit, omega_rad_per_s * fit.t_s);
}

double fit_model_derivative(const FringeFit& fit, double omega_rad_per_s) {
  return model_derivative_theta(fit, omega_rad_per_s * fit.t_s) * fit.t_s;
}

double numerical_fisher(const FringeFit& fit, double omega_rad_per_s) {
  const double f = fit_model_value(fit, omega_rad_per_s);
  const double df = fit_model_derivative(fit, omega_rad_per_s);
  const double denom = std::max(1.0 - f * f, 1e-12);
  return df * df / denom;
}

OperatingPoint operating_point(const FringeFit& fit, double omega_guess) {
  if (fit.low_contrast || fit.contrast <= 0.0)
    throw NumericalError("operating_point: fringe carries no usable signal");
  const double n_eff = std::max(fit.n_eff, 1e-9);
  const double period = 2.0 * units::pi / (n_eff * fit.t_s);
  double a = omega_guess - 0.5 * period;
  double b = omega_guess + 0.5 * period;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = numerical_fisher(fit, x1), f2 = numerical_fisher(fit, x2);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * std::abs(omega_guess) + 1e-15; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = numerical_fisher(fit, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = numerical_fisher(fit, x1);
    }
  }
  OperatingPoint op;
  op.omega = 0.5 * (a + b);
  op.omega_ad = op.omega - omega_guess;
  op.fisher = numerical_fisher(fit, op.omega);
  return op;
}

SensitivityReport sensitivity_report(double fisher, double omega0_rad_per_s, double t_s,
                                     double mean_n) {
  if (fisher < 0.0) throw ValidationError("sensitivity_report: negative Fisher information");
  SensitivityReport rep;
  rep.fisher = fisher;
  rep.nu_convention = 1;
  rep.s_c = 1.0 / (std::abs(omega0_rad_per_s) * t_s * std::sqrt(mean_n));
  if (fisher == 0.0) throw NumericalError("sensitivity_report: undefined ratio at F = 0");
  rep.s_q = 1.0 / (std::abs(omega0_rad_per_s) * std::sqrt(fisher));
  rep.ratio = rep.s_c / rep.s_q;
  return rep;
}

double best_gridpoint_fisher_per_t2(double mean_n, double p_r, const CrossoverOptions& opts) {
  if (opts.grid_points < 8) throw ValidationError("crossover: grid too coarse");
  double best = 0.0;
  for (int k = 1; k <= opts.grid_points; ++k) {
    const double theta = opts.theta_span * double(k) / double(opts.grid_points);
    try {
      best = std::max(best, poisson_control_fisher_per_t2(mean_n, p_r, opts.p_c, theta,
                                                          opts.contrast));
    } catch (const NumericalError&) {
      // exact-extinction grid point (stationary); not a usable operating point
    }
  }
  return best;
}

double minimal_matching_purity(double mean_n, double target_fisher_per_t2,
                               const CrossoverOptions& opts) {
  const double f0 = best_gridpoint_fisher_per_t2(mean_n, 0.0, opts);
  if (f0 >= target_fisher_per_t2) return 0.0;
  double lo = 0.0, hi = 1.0;
  if (best_gridpoint_fisher_per_t2(mean_n, 1.0, opts) < target_fisher_per_t2)
    throw NumericalError("minimal_matching_purity: target unreachable at p_r = 1");
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (best_gridpoint_fisher_per_t2(mean_n, mid, opts) >= target_fisher_per_t2)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace qmetro
