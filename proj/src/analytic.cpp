#include "qmetro/analytic.hpp"

#include <algorithm>
#include <cmath>

namespace qmetro {

void NoiseParams::validate() const {
  if (p_c < 0.0 || p_c > 1.0) throw ValidationError("NoiseParams: p_c outside [0,1]");
  if (p_r < 0.0 || p_r > 1.0) throw ValidationError("NoiseParams: p_r outside [0,1]");
}

void ProtocolConfig::validate() const {
  if (n_register < 0) throw ValidationError("ProtocolConfig: n_register < 0");
  if (t_s < 0.0) throw ValidationError("ProtocolConfig: t < 0");
  if (nu < 1) throw ValidationError("ProtocolConfig: nu < 1");
}

double OutcomeDistribution::sum() const {
  double s = 0.0;
  for (double v : p0) s += v;
  for (double v : p1) s += v;
  return s;
}

std::vector<double> OutcomeDistribution::flattened() const {
  std::vector<double> out;
  out.reserve(p0.size() + p1.size());
  out.insert(out.end(), p0.begin(), p0.end());
  out.insert(out.end(), p1.begin(), p1.end());
  return out;
}

double binomial_mixture_weight(int n_register, int n, double p_r) {
  if (n < 0 || n > n_register) return 0.0;
  const int big = 40;
  if (n_register <= big) {
    double binom = 1.0;
    for (int i = 0; i < n; ++i) binom = binom * double(n_register - i) / double(i + 1);
    return binom * std::pow(0.5 * (1.0 + p_r), n_register - n) * std::pow(0.5 * (1.0 - p_r), n);
  }
  // log-space for large registers (Poisson-loading tails reach m ~ 100)
  if (p_r >= 1.0) return n == 0 ? 1.0 : 0.0;
  const double lg = std::lgamma(double(n_register + 1)) - std::lgamma(double(n + 1)) -
                    std::lgamma(double(n_register - n + 1));
  const double lw = lg + double(n_register - n) * std::log(0.5 * (1.0 + p_r)) +
                    double(n) * std::log(0.5 * (1.0 - p_r));
  return std::exp(lw);
}

OutcomeDistribution outcome_probabilities(const ProtocolConfig& cfg, const NoiseParams& noise) {
  cfg.validate();
  noise.validate();
  const int nr = cfg.n_register;
  const double theta = cfg.omega_rad_per_s * cfg.t_s;
  OutcomeDistribution dist;
  dist.n_register = nr;
  dist.p0.resize(nr + 1);
  dist.p1.resize(nr + 1);
  for (int n = 0; n <= nr; ++n) {
    const double w = binomial_mixture_weight(nr, n, noise.p_r);
    const double c = std::cos(double(nr - 2 * n) * theta);
    dist.p0[n] = w * 0.5 * (1.0 + noise.p_c * c);
    dist.p1[n] = w * 0.5 * (1.0 - noise.p_c * c);
  }
  return dist;
}

std::pair<double, double> control_marginals(const ProtocolConfig& cfg, const NoiseParams& noise) {
  const OutcomeDistribution d = outcome_probabilities(cfg, noise);
  double s0 = 0.0, s1 = 0.0;
  for (int n = 0; n <= d.n_register; ++n) {
    s0 += d.p0[n];
    s1 += d.p1[n];
  }
  return {s0, s1};
}

namespace {

double fisher_from_probs(const std::vector<double>& p, const std::vector<double>& dp,
                         const FisherOptions& opts) {
  if (p.size() != dp.size()) throw ValidationError("fisher: family/derivative size mismatch");
  double f = 0.0;
  bool any_live = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < opts.prob_floor) continue;  // excluded; analytic limit is zero unless the
                                           // derivative stays finite, which the protocol
                                           // families avoid at generic evaluation points
    any_live = true;
    f += dp[i] * dp[i] / p[i];
  }
  if (!any_live && opts.throw_if_degenerate)
    throw NumericalError("fisher: all outcomes below probability floor");
  return f;
}

}  // namespace

double fisher_information(const ProbabilityFamily& family, double omega,
                          const FisherOptions& opts) {
  const double h = std::max(opts.rel_step * std::abs(omega), opts.min_step);
  const std::vector<double> p = family(omega);
  const std::vector<double> pp = family(omega + h);
  const std::vector<double> pm = family(omega - h);
  if (pp.size() != p.size() || pm.size() != p.size())
    throw ValidationError("fisher: family returned inconsistent sizes");
  std::vector<double> dp(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) dp[i] = (pp[i] - pm[i]) / (2.0 * h);
  return fisher_from_probs(p, dp, opts);
}

double fisher_information(const ProbabilityFamily& family, const ProbabilityFamily& derivative,
                          double omega, const FisherOptions& opts) {
  return fisher_from_probs(family(omega), derivative(omega), opts);
}

ProbabilityFamily full_distribution_family(ProtocolConfig cfg, NoiseParams noise) {
  cfg.validate();
  noise.validate();
  return [cfg, noise](double omega) {
    ProtocolConfig c = cfg;
    c.omega_rad_per_s = omega;
    return outcome_probabilities(c, noise).flattened();
  };
}

ProbabilityFamily control_only_family(ProtocolConfig cfg, NoiseParams noise) {
  cfg.validate();
  noise.validate();
  return [cfg, noise](double omega) {
    ProtocolConfig c = cfg;
    c.omega_rad_per_s = omega;
    const auto [p0, p1] = control_marginals(c, noise);
    return std::vector<double>{p0, p1};
  };
}

double fisher_closed_form(int n_register, double p_r, double t_s) {
  const double n = double(n_register);
  return ((1.0 - p_r * p_r) * n + p_r * p_r * n * n) * t_s * t_s;
}

double sensitivity(double fisher, int nu, double omega_rad_per_s) {
  if (nu < 1) throw ValidationError("sensitivity: nu < 1");
  if (omega_rad_per_s == 0.0) throw ValidationError("sensitivity: omega = 0");
  if (fisher <= 0.0) throw NumericalError("sensitivity: non-informative distribution (F <= 0)");
  return 1.0 / (std::abs(omega_rad_per_s) * std::sqrt(double(nu) * fisher));
}

namespace {

double poisson_log_pmf(double mean, int m) {
  return double(m) * std::log(mean) - mean - std::lgamma(double(m + 1));
}

}  // namespace

double poisson_average(double mean, const std::function<double(int)>& fringe,
                       const PoissonAverageOptions& opts) {
  if (mean < 0.0) throw ValidationError("poisson_average: negative mean");
  if (mean == 0.0) return fringe(0);
  int trunc = opts.truncation;
  if (trunc < 0) trunc = int(std::ceil(mean + 12.0 * std::sqrt(mean)));
  // geometric bound on the omitted tail: pmf(M+1) / (1 - mean/(M+2))
  const double ratio = mean / double(trunc + 2);
  if (ratio >= 1.0) throw NumericalError("poisson_average: truncation below the mean");
  const double tail = std::exp(poisson_log_pmf(mean, trunc + 1)) / (1.0 - ratio);
  if (tail > opts.tail_bound)
    throw NumericalError("poisson_average: insufficient truncation for requested tail bound");
  double acc = 0.0;
  double pmf = std::exp(-mean);
  for (int m = 0; m <= trunc; ++m) {
    if (m > 0) pmf *= mean / double(m);
    acc += pmf * fringe(m);
  }
  return acc;
}

double poisson_fringe_closed_form(double mean, double p_r, double theta) {
  return std::exp(mean * (std::cos(theta) - 1.0)) * std::cos(mean * p_r * std::sin(theta));
}

double poisson_fringe_derivative(double mean, double p_r, double theta) {
  const double env = std::exp(mean * (std::cos(theta) - 1.0));
  const double arg = mean * p_r * std::sin(theta);
  return env * (-mean * std::sin(theta) * std::cos(arg) -
                mean * p_r * std::cos(theta) * std::sin(arg));
}

double poisson_pure_fringe_series(double mean, double theta, const PoissonAverageOptions& opts) {
  return poisson_average(
      mean, [theta](int m) { return std::cos(double(m) * theta); }, opts);
}

double poisson_control_fisher_per_t2(double mean, double p_r, double p_c, double theta,
                                     double contrast) {
  const double a = p_c * contrast;
  const double phi = poisson_fringe_closed_form(mean, p_r, theta);
  const double dphi = poisson_fringe_derivative(mean, p_r, theta);
  const double denom = 1.0 - a * a * phi * phi;
  if (denom <= 0.0) throw NumericalError("poisson_control_fisher: singular point (perfect extinction)");
  return a * a * dphi * dphi / denom;
}

}  // namespace qmetro
