#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "qmetro/config.hpp"
#include "qmetro/estimation.hpp"
#include "qmetro/io.hpp"

using namespace qmetro;

namespace {

ExperimentConfig small_full_config(int n_register, double span, int points, int nu,
                                   std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.mode = ExperimentConfig::Mode::full_dynamics;
  cfg.mean_n_register = n_register;
  cfg.noise = NoiseParams{0.95, 0.95};
  cfg.omega0_rad_per_s = 2.0 * units::pi * 5326.0;
  cfg.t_s = 375e-6;
  cfg.nu = nu;
  cfg.seed = seed;
  cfg.jobs = 2;
  cfg.scan_rel.clear();
  for (int i = 0; i < points; ++i)
    cfg.scan_rel.push_back(-span + 2.0 * span * double(i) / double(points - 1));
  return cfg;
}

FringeDataset synthetic_cosine_dataset(double contrast, double phase, double n_eff, int points,
                                       double span) {
  FringeDataset d;
  d.nu = 1;
  d.ninf = true;
  d.omega0_rad_per_s = 2.0 * units::pi * 5326.0;
  d.t_s = 375e-6;
  d.mean_n_register = n_eff;
  d.noise = NoiseParams{1.0, 1.0};
  for (int i = 0; i < points; ++i) {
    FringePoint p;
    p.rel_detuning = -span + 2.0 * span * double(i) / double(points - 1);
    const double theta = d.omega0_rad_per_s * (1.0 + p.rel_detuning) * d.t_s;
    p.sigma_z = contrast * std::cos(n_eff * theta + phase);
    d.points.push_back(p);
  }
  return d;
}

}  // namespace

TEST_CASE("full protocol: determinism and tally conservation") {
  const PhysicalSetup setup = reference_setup(1e4);
  ExperimentConfig cfg = small_full_config(1, 0.3, 5, 6, 42);
  const FringeDataset a = run_full_protocol(cfg, setup);
  const FringeDataset b = run_full_protocol(cfg, setup);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].sigma_z == b.points[i].sigma_z);
    CHECK(a.points[i].n0 == b.points[i].n0);
    CHECK(a.points[i].n0 + a.points[i].n1 + a.points[i].losses == cfg.nu);
  }
  cfg.seed = 43;
  const FringeDataset c = run_full_protocol(cfg, setup);
  bool any_differ = false;
  for (std::size_t i = 0; i < a.points.size(); ++i)
    if (a.points[i].n0 != c.points[i].n0) any_differ = true;
  CHECK(any_differ);
}

TEST_CASE("full protocol: ideal limit matches the analytic marginals") {
  // dissipation off, blockade-limit interactions, pure inputs, probability
  // reporting; the simulated fringe must match the closed form
  PhysicalSetup setup = reference_setup(0.0);
  setup.scheme.gamma_e_per_s = 0.0;
  setup.control_register.cdd_mhz_um3 = 2.92e8;  // deep-blockade override
  setup.magnus.steps = 256;
  for (int n_register : {1, 2}) {
    ExperimentConfig cfg = small_full_config(n_register, 0.25, 7, 1, 7);
    cfg.noise = NoiseParams{1.0, 1.0};
    cfg.ninf = true;
    const FringeDataset data = run_full_protocol(cfg, setup);
    for (const FringePoint& p : data.points) {
      ProtocolConfig pc{n_register, cfg.omega0_rad_per_s * (1.0 + p.rel_detuning), cfg.t_s, 1};
      const auto [q0, q1] = control_marginals(pc, cfg.noise);
      CHECK(p.sigma_z == doctest::Approx(q0 - q1).epsilon(2e-3));
    }
  }
}

TEST_CASE("large-N model: perfect gates reduce to the analytic fringe") {
  const PhysicalSetup setup = reference_setup(1e4);
  ExperimentConfig cfg;
  cfg.mode = ExperimentConfig::Mode::large_n_model;
  cfg.mean_n_register = 25.0;
  cfg.noise = NoiseParams{1.0, 1.0};
  cfg.nu = 200;
  cfg.seed = 5;
  cfg.ninf = true;
  cfg.include_losses = false;
  cfg.scan_rel = {-1e-4, 0.0, 1e-4};
  const FringeDataset data = run_large_n(cfg, setup, perfect_gate_model(1.0));
  // nu -> infinity mode still averages over the Poisson draw of N; compare
  // against the closed-form envelope with generous sampling tolerance
  for (const FringePoint& p : data.points) {
    const double theta = cfg.omega0_rad_per_s * (1.0 + p.rel_detuning) * cfg.t_s;
    CHECK(p.sigma_z ==
          doctest::Approx(poisson_fringe_closed_form(25.0, 1.0, theta)).epsilon(0.15));
  }
}

TEST_CASE("large-N model: empirical-phase mode with trivial records is analytic") {
  const PhysicalSetup setup = reference_setup(0.0);
  GateContrastModel model;
  GatePairRecord rec;
  rec.u_blocked = Eigen::Matrix2cd::Identity();
  rec.u_lifted << 0.0, 1.0, 1.0, 0.0;
  rec.theta = 0.0;
  rec.amplitude = 1.0;
  model.records = {rec};
  model.kappa_control = 1.0;
  model.p_c = 0.95;
  ExperimentConfig cfg;
  cfg.mode = ExperimentConfig::Mode::large_n_model;
  cfg.mean_n_register = 10.0;
  cfg.noise = NoiseParams{0.95, 0.7};
  cfg.nu = 400;
  cfg.seed = 11;
  cfg.ninf = true;
  cfg.include_losses = false;
  cfg.scan_rel = {0.0};
  LargeNOptions opts;
  opts.gate_mode = LargeNGateMode::empirical_phases;
  const FringeDataset data = run_large_n(cfg, setup, model, opts);
  const double theta = cfg.omega0_rad_per_s * cfg.t_s;
  CHECK(data.points[0].sigma_z ==
        doctest::Approx(0.95 * poisson_fringe_closed_form(10.0, 0.7, theta)).epsilon(0.2));
}

TEST_CASE("large-N model: loss tallies and loss fraction") {
  const PhysicalSetup setup = reference_setup(1e4);
  ExperimentConfig cfg;
  cfg.mode = ExperimentConfig::Mode::large_n_model;
  cfg.mean_n_register = 25.0;
  cfg.noise = NoiseParams{0.95, 0.95};
  cfg.nu = 2000;
  cfg.seed = 19;
  cfg.include_losses = true;
  cfg.scan_rel = {0.0, 2e-4};
  const FringeDataset data = run_large_n(cfg, setup, perfect_gate_model(0.95));
  data.check_tallies();
  long losses = 0;
  for (const auto& p : data.points) losses += p.losses;
  const double frac = double(losses) / double(cfg.nu * data.points.size());
  CHECK(frac == doctest::Approx(0.06).epsilon(0.25));  // complement of ~0.94 survival
}

TEST_CASE("gravity omega") {
  CHECK(gravity_omega_rad_per_s(0.0) == 0.0);
  CHECK(units::rad_per_s_to_hz(gravity_omega_rad_per_s(1.0)) ==
        doctest::Approx(2145.0).epsilon(0.005));
  CHECK(units::rad_per_s_to_hz(gravity_omega_rad_per_s(2.5)) ==
        doctest::Approx(kGravityOmega0LinearHz).epsilon(0.002));
  // both named presets for the 2.5-um scenario stay available
  CHECK(kGravityOmega0QuotedHz == 5326.0);
  CHECK(kGravityOmega0LinearHz == 5363.0);
}

TEST_CASE("fringe fit: noiseless recovery and refit consistency") {
  const FringeDataset d = synthetic_cosine_dataset(0.9, 0.4, 25.0 * 0.95, 21, 2e-3);
  FitOptions opts;
  opts.n_eff = 25.0 * 0.95;
  const FringeFit fit = fit_fringe(d, FringeModel::cosine, opts);
  CHECK(fit.converged);
  CHECK(fit.contrast == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(fit.residual_rms < 1e-7);

  // data generated from the fitted model refits to the same parameters
  FringeDataset d2 = d;
  for (auto& p : d2.points)
    p.sigma_z = fit_model_value(fit, d.omega0_rad_per_s * (1.0 + p.rel_detuning));
  const FringeFit fit2 = fit_fringe(d2, FringeModel::cosine, opts);
  CHECK(fit2.contrast == doctest::Approx(fit.contrast).epsilon(1e-8));
}

TEST_CASE("fringe fit: sampled data within the binomial error band") {
  const PhysicalSetup setup = reference_setup(0.0);
  ExperimentConfig cfg;
  cfg.mode = ExperimentConfig::Mode::large_n_model;
  cfg.mean_n_register = 25.0;
  cfg.noise = NoiseParams{0.95, 0.95};
  cfg.nu = 49;
  cfg.seed = 31;
  cfg.include_losses = false;
  const int points = 25;
  for (int i = 0; i < points; ++i)
    cfg.scan_rel.push_back(-1.5e-4 + 3e-4 * double(i) / double(points - 1));
  const FringeDataset data = run_large_n(cfg, setup, perfect_gate_model(0.95));
  const FringeFit fit = fit_fringe(data, FringeModel::cosine, {});
  // true local contrast ~ p_c * envelope; binomial 3-sigma band
  const double sigma = std::sqrt((1.0 - 0.9 * 0.9) / double(cfg.nu * points / 2));
  CHECK(std::abs(fit.contrast - 0.95) < 3.0 * sigma + 0.02);
}

TEST_CASE("fringe fit: flat data flags low contrast") {
  FringeDataset d = synthetic_cosine_dataset(0.0, 0.0, 23.75, 15, 2e-3);
  RngStream rng(3);
  for (auto& p : d.points) p.sigma_z = 0.02 * rng.gaussian();
  const FringeFit fit = fit_fringe(d, FringeModel::cosine, {});
  CHECK(fit.contrast < 0.1);
  CHECK(fit.low_contrast);
  CHECK_THROWS_AS(operating_point(fit, d.omega0_rad_per_s), NumericalError);
}

TEST_CASE("fit models: binomial mixture and poisson envelope") {
  // mixture model on an exact fixed-N fringe
  FringeDataset d;
  d.nu = 1;
  d.ninf = true;
  d.omega0_rad_per_s = 2.0 * units::pi * 5326.0;
  d.t_s = 375e-6;
  d.mean_n_register = 3;
  d.noise = NoiseParams{0.95, 0.95};
  for (int i = 0; i < 25; ++i) {
    FringePoint p;
    p.rel_detuning = -0.3 + 0.6 * double(i) / 24.0;
    ProtocolConfig pc{3, d.omega0_rad_per_s * (1.0 + p.rel_detuning), d.t_s, 1};
    const auto [q0, q1] = control_marginals(pc, d.noise);
    p.sigma_z = q0 - q1;
    d.points.push_back(p);
  }
  const FringeFit fit = fit_fringe(d, FringeModel::binomial_mixture, {});
  CHECK(fit.contrast == doctest::Approx(0.95).epsilon(1e-4));
  CHECK(fit.residual_rms < 1e-6);

  // poisson envelope model on the closed-form fringe
  FringeDataset pd;
  pd.nu = 1;
  pd.ninf = true;
  pd.omega0_rad_per_s = d.omega0_rad_per_s;
  pd.t_s = d.t_s;
  pd.mean_n_register = 25.0;
  pd.noise = NoiseParams{1.0, 0.95};
  for (int i = 0; i < 31; ++i) {
    FringePoint p;
    p.rel_detuning = -3e-3 + 6e-3 * double(i) / 30.0;
    const double theta = pd.omega0_rad_per_s * (1.0 + p.rel_detuning) * pd.t_s;
    p.sigma_z = 0.8 * poisson_fringe_closed_form(25.0, 0.95, theta);
    pd.points.push_back(p);
  }
  const FringeFit pfit = fit_fringe(pd, FringeModel::poisson_envelope, {});
  CHECK(pfit.contrast == doctest::Approx(0.8).epsilon(1e-5));
}

TEST_CASE("fisher from fitted model and operating point") {
  // pure GHZ fringe: F = N^2 t^2 at the steepest point
  const int n = 25;
  const FringeDataset d = synthetic_cosine_dataset(1.0, 0.0, n, 21, 2e-3);
  FitOptions opts;
  opts.n_eff = n;
  const FringeFit fit = fit_fringe(d, FringeModel::cosine, opts);
  const OperatingPoint op = operating_point(fit, d.omega0_rad_per_s);
  const double t = d.t_s;
  CHECK(op.fisher == doctest::Approx(fisher_closed_form(n, 1.0, t)).epsilon(0.01));

  // symmetric fringe: equal Fisher at symmetric offsets
  const double f_plus = numerical_fisher(fit, d.omega0_rad_per_s * (1.0 + 4e-5));
  const double f_minus = numerical_fisher(fit, d.omega0_rad_per_s * (1.0 - 4e-5));
  CHECK(f_plus == doctest::Approx(f_minus).epsilon(1e-4));

  // contrast-0 model has zero Fisher
  FringeFit flat = fit;
  flat.contrast = 0.0;
  CHECK(numerical_fisher(flat, d.omega0_rad_per_s) == doctest::Approx(0.0));
}

TEST_CASE("sensitivity report") {
  const double t = 375e-6;
  const double omega0 = 2.0 * units::pi * 5326.0;
  // omega0 t ~ 4 pi: classical reference 1/(omega t sqrt(25))
  SensitivityReport rep = sensitivity_report(100.0 * t * t, omega0, t, 25.0);
  CHECK(rep.s_c == doctest::Approx(15.9e-3).epsilon(5e-3));
  CHECK(rep.nu_convention == 1);

  const double f_ideal = fisher_closed_form(25, 0.95, t);
  rep = sensitivity_report(f_ideal, omega0, t, 25.0);
  CHECK(rep.ratio == doctest::Approx(std::sqrt(f_ideal / (25.0 * t * t))).epsilon(1e-9));
  CHECK(rep.ratio == doctest::Approx(4.76).epsilon(2e-3));
  CHECK_THROWS_AS(sensitivity_report(0.0, omega0, t, 25.0), NumericalError);
}

TEST_CASE("purity crossover search") {
  // the grid maximum grows monotonically with p_r, so bisection brackets it
  CrossoverOptions opts;
  const double f_low = best_gridpoint_fisher_per_t2(25.0, 0.05, opts);
  const double f_high = best_gridpoint_fisher_per_t2(25.0, 0.3, opts);
  CHECK(f_high > f_low);
  const double p_match = minimal_matching_purity(25.0, 25.0, opts);
  CHECK(p_match > 0.0);
  CHECK(p_match < 0.2);
  const double p_higher = minimal_matching_purity(25.0, 25.0 + 625.0 * 0.25 * 0.25, opts);
  CHECK(p_higher > 0.2);
  CHECK(p_higher < 0.35);
}

TEST_CASE("config: parsing, overrides, environment") {
  Config cfg = Config::from_string(
      "[protocol]\n"
      "p_r = 0.7   # comment\n"
      "nu = 12\n"
      "[scan]\n"
      "points = 5\n"
      "rel_span = 0.1\n");
  CHECK(cfg.get_double("protocol.p_r") == 0.7);
  CHECK(cfg.get_int("protocol.nu") == 12);
  // defaults fill unset keys
  CHECK(cfg.get_double("gate.tau_s") == 0.5e-6);
  cfg.apply_set_expression("protocol.p_r=0.5");
  CHECK(cfg.get_double("protocol.p_r") == 0.5);
  setenv("QMETRO_PROTOCOL__NU", "7", 1);
  cfg.apply_environment();
  unsetenv("QMETRO_PROTOCOL__NU");
  CHECK(cfg.get_int("protocol.nu") == 7);

  const ExperimentConfig e = cfg.build_experiment();
  CHECK(e.scan_rel.size() == 5);
  CHECK(e.scan_rel.front() == doctest::Approx(-0.1));
  CHECK(e.scan_rel.back() == doctest::Approx(0.1));

  CHECK_THROWS_AS(Config::from_string("[x\n"), ValidationError);
  CHECK_THROWS_AS(Config::from_string("novalue\n"), ValidationError);
  CHECK_THROWS_AS(cfg.get_double("protocol.mode"), ValidationError);
  Config bad = Config::defaults();
  bad.apply_override("scan.points", "0");
  CHECK_THROWS_AS(bad.build_experiment(), ValidationError);
}

TEST_CASE("io: gate model json round trip and csv output") {
  GateContrastModel model;
  GatePairRecord rec;
  rec.u_blocked = Eigen::Matrix2cd::Identity();
  rec.u_lifted << 0.0, Cplx(0.8, -0.6), Cplx(0.8, 0.6), 0.0;
  rec.theta = 0.644;
  rec.amplitude = 0.97;
  model.records = {rec};
  model.kappa_control = 0.995;
  model.p_c = 0.95;
  model.curve_amplitude = 0.94;
  model.curve_decay = 0.005;
  model.has_curve = true;
  model.curve_points = {{1, 0.94}, {2, 0.93}};
  const GateContrastModel back = gate_model_from_json(gate_model_to_json(model));
  CHECK(back.records.size() == 1);
  CHECK((back.records[0].u_lifted - rec.u_lifted).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(back.curve_decay == model.curve_decay);
  CHECK(back.contrast_at(25.0) == doctest::Approx(model.contrast_at(25.0)));

  FringeDataset d = synthetic_cosine_dataset(0.5, 0.0, 2.0, 6, 0.1);
  const std::string path = "/tmp/qmetro_test_out/fringes.csv";
  std::filesystem::remove_all("/tmp/qmetro_test_out");
  write_fringe_csv(path, d, {{"cell", "3"}});
  REQUIRE(std::filesystem::exists(path));
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "cell,delta_omega_over_omega0,sigma_z_mean,n0,n1,losses,seed");
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 6);
}
