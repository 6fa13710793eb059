#include "qmetro/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace qmetro {

PhysicalSetup reference_setup(double gamma_dph_per_s) {
  PhysicalSetup s;
  s.pulses.pulse.delta_e_rad_per_s = units::mhz_to_rad_per_s(1000.0);
  s.pulses.pulse.tau_s = 0.5e-6;
  s.pulses.amplitude_scale = kCalibratedAmplitudeScale;
  s.scheme.delta_e_rad_per_s = s.pulses.pulse.delta_e_rad_per_s;
  s.scheme.gamma_e_per_s = 6.065e6;
  s.scheme.gamma_dph_per_s = gamma_dph_per_s;
  // control trap: 825 nm beam along x, waist 1.0 um, 1 mK depth, 100 uK
  s.control_trap.widths_um = {0.30, 0.08, 0.08};
  s.control_trap.center_um = {0.0, 0.0, 0.0};
  s.control_trap.waists_um = {1.0, 1.0, 0.0};
  // register trap: elliptical beam, separated by 2 um along x
  s.register_trap.widths_um = {1.73, 1.58, 0.19};
  s.register_trap.center_um = {2.0, 0.0, 0.0};
  s.register_trap.waists_um = {1.2, 10.0, 0.0};
  return s;
}

void ExperimentConfig::validate() const {
  noise.validate();
  if (scan_rel.empty()) throw ValidationError("ExperimentConfig: empty scan grid");
  if (t_s <= 0.0) throw ValidationError("ExperimentConfig: t must be > 0");
  if (omega0_rad_per_s == 0.0) throw ValidationError("ExperimentConfig: omega0 must be nonzero");
  if (nu < 1) throw ValidationError("ExperimentConfig: nu < 1");
  if (mode == Mode::full_dynamics) {
    const double n = mean_n_register;
    if (n != std::floor(n) || n < 1 || n > 3)
      throw ValidationError("ExperimentConfig: full_dynamics requires integer N_R in 1..3");
  } else {
    if (mean_n_register <= 0.0) throw ValidationError("ExperimentConfig: mean N_R must be > 0");
  }
}

void FringeDataset::check_tallies() const {
  if (ninf) return;
  for (const FringePoint& p : points)
    if (p.n0 + p.n1 + p.losses != nu) throw NumericalError("FringeDataset: tally mismatch");
}

namespace {

struct SampledPositions {
  Vec3 control;
  std::vector<Vec3> registers;
};

// fresh draw with retry on contact-floor pathologies
SampledPositions sample_gate_positions(const PhysicalSetup& setup, int n_register, RngStream& rng,
                                       GateInteractions& v_out, long& retries) {
  for (int attempt = 0; attempt < 128; ++attempt) {
    SampledPositions pos;
    auto c = sample_positions(setup.control_trap, 1, rng);
    pos.control = c[0];
    pos.registers = sample_positions(setup.register_trap, n_register, rng);
    try {
      v_out = interactions_from_positions(pos.control, pos.registers, setup.control_register,
                                          setup.register_register);
      return pos;
    } catch (const ModelRangeError&) {
      ++retries;
    }
  }
  throw NumericalError("sample_gate_positions: persistent contact-floor violations");
}

MatC register_product_mixture(int n_register, double p_r) {
  Eigen::Vector4cd reg;
  reg << 0.5 * (1.0 + p_r), 0.5 * (1.0 - p_r), 0.0, 0.0;
  MatC rho = reg.asDiagonal();
  for (int k = 1; k < n_register; ++k) rho = kron(rho, MatC(reg.asDiagonal()));
  return rho;
}

void apply_register_free_evolution(MatC& block, int n_register, double phase) {
  const long dim = block.rows();
  std::vector<int> ones(dim);
  for (long i = 0; i < dim; ++i) ones[i] = count_level(i, n_register, kG1);
  for (long i = 0; i < dim; ++i)
    for (long j = 0; j < dim; ++j) {
      const int d = ones[i] - ones[j];
      if (d != 0) block(i, j) *= std::exp(Cplx(0.0, -phase * double(d)));
    }
}

void run_items_parallel(int jobs, int n_items, const std::function<void(int)>& work) {
  if (jobs <= 1 || n_items <= 1) {
    for (int i = 0; i < n_items; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_items) return;
      work(i);
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min(jobs, n_items);
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace

FringeDataset run_full_protocol(const ExperimentConfig& cfg, const PhysicalSetup& setup) {
  cfg.validate();
  if (cfg.mode != ExperimentConfig::Mode::full_dynamics)
    throw ValidationError("run_full_protocol: config mode mismatch");
  const int n_register = int(cfg.mean_n_register);
  const MatC rho_regs = register_product_mixture(n_register, cfg.noise.p_r);

  FringeDataset out;
  out.points.resize(cfg.scan_rel.size());
  out.nu = cfg.nu;
  out.ninf = cfg.ninf;
  out.omega0_rad_per_s = cfg.omega0_rad_per_s;
  out.t_s = cfg.t_s;
  out.mean_n_register = cfg.mean_n_register;
  out.noise = cfg.noise;
  out.seed = cfg.seed;

  const RngStream base(cfg.seed);
  std::atomic<long> retries{0};

  const auto run_point = [&](int ip) {
    const double rel = cfg.scan_rel[ip];
    const double phase = cfg.omega0_rad_per_s * (1.0 + rel) * cfg.t_s;
    long n0 = 0, n1 = 0;
    double prob_acc = 0.0;
    for (int rep = 0; rep < cfg.nu; ++rep) {
      RngStream rng = base.fork(0x11, std::uint64_t(ip), std::uint64_t(rep));
      long local_retries = 0;
      GateInteractions v1, v2;
      sample_gate_positions(setup, n_register, rng, v1, local_retries);
      GateJob job1{setup.scheme, setup.pulses, n_register, v1};
      MatC block = propagate_cross_block(rho_regs, job1, setup.magnus);
      apply_register_free_evolution(block, n_register, phase);
      sample_gate_positions(setup, n_register, rng, v2, local_retries);
      GateJob job2{setup.scheme, setup.pulses, n_register, v2};
      block = propagate_cross_block(block, job2, setup.magnus);
      retries += local_retries;
      const double p0 =
          std::clamp(0.5 + 0.5 * cfg.noise.p_c * block.trace().real(), 0.0, 1.0);
      if (cfg.ninf) {
        prob_acc += 2.0 * p0 - 1.0;
      } else {
        if (rng.bernoulli(p0)) ++n0; else ++n1;
      }
    }
    FringePoint& pt = out.points[ip];
    pt.rel_detuning = rel;
    if (cfg.ninf) {
      pt.sigma_z = prob_acc / double(cfg.nu);
    } else {
      pt.n0 = n0;
      pt.n1 = n1;
      pt.sigma_z = double(n0 - n1) / double(cfg.nu);
    }
  };

  run_items_parallel(cfg.jobs, int(cfg.scan_rel.size()), run_point);
  out.position_retries = retries.load();
  out.check_tallies();
  return out;
}

double GateContrastModel::contrast_at(double n) const {
  if (perfect) return p_c;
  if (!has_curve) throw ValidationError("GateContrastModel: no fitted curve available");
  return curve_amplitude * std::exp(-curve_decay * n);
}

GateContrastModel perfect_gate_model(double p_c) {
  GateContrastModel m;
  m.perfect = true;
  m.p_c = p_c;
  m.kappa_control = 1.0;
  return m;
}

std::vector<GatePairRecord> characterize_gate_records(const PhysicalSetup& setup,
                                                      const CharacterizationOptions& opts) {
  if (opts.n_positions < 2) throw ValidationError("characterize_gate_records: need >= 2 positions");
  std::vector<GatePairRecord> records(opts.n_positions);
  const RngStream base(opts.seed);
  long retries = 0;
  for (int i = 0; i < opts.n_positions; ++i) {
    RngStream rng = base.fork(0x22, std::uint64_t(i));
    GateInteractions v;
    sample_gate_positions(setup, 1, rng, v, retries);
    GateJob job{setup.scheme, setup.pulses, 1, v};
    records[i] = cross_pair_record(job, opts.magnus);
  }
  return records;
}

namespace {

// per-atom factor of the factorized fringe: tr[B2 u B1 rho U1^dag u^dag U2^dag]
Cplx atom_fringe_factor(const GatePairRecord& g1, const GatePairRecord& g2, double p_r,
                        double phase) {
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  u(1, 1) = std::exp(Cplx(0.0, -phase));
  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  rho(0, 0) = 0.5 * (1.0 + p_r);
  rho(1, 1) = 0.5 * (1.0 - p_r);
  const Eigen::Matrix2cd m = g2.u_blocked * u * g1.u_blocked * rho * g1.u_lifted.adjoint() *
                             u.adjoint() * g2.u_lifted.adjoint();
  return m.trace();
}

// linear least squares of y ~ A cos(n x) + B sin(n x) + d
double cosine_amplitude_fit(const std::vector<double>& x, const std::vector<double>& y, double n) {
  Eigen::MatrixXd m(x.size(), 3);
  Eigen::VectorXd rhs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    m(i, 0) = std::cos(n * x[i]);
    m(i, 1) = std::sin(n * x[i]);
    m(i, 2) = 1.0;
    rhs(i) = y[i];
  }
  Eigen::Vector3d sol = (m.transpose() * m).ldlt().solve(m.transpose() * rhs);
  return std::hypot(sol(0), sol(1));
}

}  // namespace

GateContrastModel gate_contrast_curve(const PhysicalSetup& setup, const NoiseParams& noise,
                                      const CharacterizationOptions& copts,
                                      const ContrastCurveOptions& opts) {
  GateContrastModel model;
  model.records = characterize_gate_records(setup, copts);
  model.p_c = noise.p_c;
  model.kappa_control =
      std::exp(-setup.scheme.gamma_dph_per_s * setup.pulses.pulse.tau_s);

  const RngStream base(opts.seed);
  const int n_rec = int(model.records.size());
  std::vector<double> log_c;
  std::vector<double> ns;
  for (int n = 1; n <= opts.max_n; ++n) {
    // scan the per-atom phase across one fringe period around pi
    std::vector<double> xs(opts.scan_points), ys(opts.scan_points);
    for (int s = 0; s < opts.scan_points; ++s) {
      const double x = units::pi + units::pi / double(n) *
                                       (2.0 * double(s) / double(opts.scan_points - 1) - 1.0);
      double acc = 0.0;
      for (int rep = 0; rep < opts.nu; ++rep) {
        RngStream rng = base.fork(0x33, std::uint64_t(n * 1000 + s), std::uint64_t(rep));
        Cplx prod = 1.0;
        for (int j = 0; j < n; ++j) {
          const GatePairRecord& g1 = model.records[rng.next_u64() % n_rec];
          const GatePairRecord& g2 = model.records[rng.next_u64() % n_rec];
          prod *= atom_fringe_factor(g1, g2, noise.p_r, x);
        }
        const double sz = model.p_c * model.kappa_control * prod.real();
        if (opts.sample_measurement) {
          const double p0 = std::clamp(0.5 * (1.0 + sz), 0.0, 1.0);
          acc += rng.bernoulli(p0) ? 1.0 : -1.0;
        } else {
          acc += sz;
        }
      }
      xs[s] = x;
      ys[s] = acc / double(opts.nu);
    }
    const double contrast = cosine_amplitude_fit(xs, ys, double(n));
    model.curve_points.emplace_back(n, contrast);
    if (contrast > 1e-6) {
      ns.push_back(double(n));
      log_c.push_back(std::log(contrast));
    }
  }
  if (ns.size() < 2) throw NumericalError("gate_contrast_curve: fit failure, too few usable points");
  // weighted linear fit of log contrast vs N
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double w = 1.0;
  double sw = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sw += w;
    sx += w * ns[i];
    sy += w * log_c[i];
    sxx += w * ns[i] * ns[i];
    sxy += w * ns[i] * log_c[i];
  }
  const double denom = sw * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) throw NumericalError("gate_contrast_curve: degenerate fit");
  const double slope = (sw * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / sw;
  model.curve_decay = -slope;
  model.curve_amplitude = std::exp(intercept);
  model.has_curve = true;
  return model;
}

FringeDataset run_large_n(const ExperimentConfig& cfg, const PhysicalSetup& setup,
                          const GateContrastModel& gates, const LargeNOptions& opts) {
  cfg.validate();
  if (cfg.mode != ExperimentConfig::Mode::large_n_model)
    throw ValidationError("run_large_n: config mode mismatch");
  if (opts.gate_mode == LargeNGateMode::curve && !gates.perfect && !gates.has_curve)
    throw ValidationError("run_large_n: gate model has no contrast curve");
  if (opts.gate_mode == LargeNGateMode::empirical_phases && !gates.perfect &&
      gates.records.empty())
    throw ValidationError("run_large_n: gate model has no records");

  FringeDataset out;
  out.points.resize(cfg.scan_rel.size());
  out.nu = cfg.nu;
  out.ninf = cfg.ninf;
  out.omega0_rad_per_s = cfg.omega0_rad_per_s;
  out.t_s = cfg.t_s;
  out.mean_n_register = cfg.mean_n_register;
  out.noise = cfg.noise;
  out.seed = cfg.seed;

  const RngStream base(cfg.seed);
  const double gamma1 = single_atom_loss_rate_per_s(setup.loss);
  const int n_rec = int(gates.records.size());

  for (std::size_t ip = 0; ip < cfg.scan_rel.size(); ++ip) {
    const double rel = cfg.scan_rel[ip];
    const double phase = cfg.omega0_rad_per_s * (1.0 + rel) * cfg.t_s;
    long n0 = 0, n1 = 0, nloss = 0;
    double acc = 0.0;
    for (int rep = 0; rep < cfg.nu; ++rep) {
      RngStream rng = base.fork(0x44, std::uint64_t(ip), std::uint64_t(rep));
      const int m = rng.poisson(cfg.mean_n_register);
      if (cfg.include_losses && !cfg.ninf) {
        const double gamma2 = two_body_loss_rate_per_s(m, setup.register_trap, setup.loss);
        const double p_loss = 1.0 - std::exp(-double(m) * cfg.t_s * (gamma2 + gamma1));
        if (rng.bernoulli(p_loss)) {
          ++nloss;  // a lost atom destroys the phase information; sigma_z = 0
          continue;
        }
      }
      double sz = 0.0;
      switch (opts.gate_mode) {
        case LargeNGateMode::perfect: {
          const Cplx z(std::cos(phase), cfg.noise.p_r * std::sin(phase));
          sz = cfg.noise.p_c * std::pow(z, m).real();
          break;
        }
        case LargeNGateMode::curve: {
          const Cplx z(std::cos(phase), cfg.noise.p_r * std::sin(phase));
          const double contrast = gates.perfect ? gates.p_c : gates.contrast_at(double(m));
          sz = contrast * std::pow(z, m).real();
          break;
        }
        case LargeNGateMode::empirical_phases: {
          Cplx prod = 1.0;
          for (int j = 0; j < m; ++j) {
            const GatePairRecord& g1 = gates.records[rng.next_u64() % n_rec];
            const GatePairRecord& g2 = gates.records[rng.next_u64() % n_rec];
            prod *= atom_fringe_factor(g1, g2, cfg.noise.p_r, phase);
          }
          sz = cfg.noise.p_c * gates.kappa_control * prod.real();
          break;
        }
      }
      if (cfg.ninf) {
        acc += sz;
      } else {
        const double p0 = std::clamp(0.5 * (1.0 + sz), 0.0, 1.0);
        if (rng.bernoulli(p0)) ++n0; else ++n1;
      }
    }
    FringePoint& pt = out.points[ip];
    pt.rel_detuning = rel;
    if (cfg.ninf) {
      pt.sigma_z = acc / double(cfg.nu);
    } else {
      pt.n0 = n0;
      pt.n1 = n1;
      pt.losses = nloss;
      pt.sigma_z = double(n0 - n1) / double(cfg.nu);
    }
  }
  out.check_tallies();
  return out;
}

double gravity_omega_rad_per_s(double dz_um, double mass_kg, double g_m_per_s2) {
  if (dz_um < 0.0) throw ValidationError("gravity_omega: dz < 0");
  return mass_kg * g_m_per_s2 * (dz_um * 1e-6) / units::hbar_J_s;
}

}  // namespace qmetro
