#include "qmetro/gatesim.hpp"

#include <lapacke.h>

#include <cmath>

#include "qmetro/units.hpp"

namespace qmetro {

namespace {

double distance_um(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

GateInteractions interactions_from_positions(const Vec3& control_pos_um,
                                             const std::vector<Vec3>& register_pos_um,
                                             const InteractionParams& control_register,
                                             const InteractionParams& register_register) {
  const int n = int(register_pos_um.size());
  GateInteractions v;
  v.v_control_register = Eigen::VectorXd::Zero(n);
  v.v_register_register = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double r = distance_um(control_pos_um, register_pos_um[k]);
    v.v_control_register(k) = units::mhz_to_rad_per_s(pair_shift_mhz(r, control_register));
  }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      const double r = distance_um(register_pos_um[j], register_pos_um[k]);
      const double w = units::mhz_to_rad_per_s(pair_shift_mhz(r, register_register));
      v.v_register_register(j, k) = w;
      v.v_register_register(k, j) = w;
    }
  return v;
}

MatC register_static_hamiltonian(const GateJob& job, ControlSector sector) {
  job.scheme.validate();
  if (job.n_register < 1 || job.n_register > 3)
    throw ValidationError("gatesim: register size must be 1..3");
  const int n = job.n_register;
  const long dim = hilbert_dim(n);
  MatC h = MatC::Zero(dim, dim);
  const double w3 = 0.5 * job.pulses.omega3();
  for (long i = 0; i < dim; ++i) {
    double diag = job.scheme.delta_e_rad_per_s * count_level(i, n, kE);
    for (int a = 0; a < n; ++a) {
      if (level_of(i, a, n) != kX) continue;
      if (sector == ControlSector::rydberg) diag += job.v.v_control_register(a);
      for (int b = a + 1; b < n; ++b)
        if (level_of(i, b, n) == kX) diag += job.v.v_register_register(a, b);
    }
    h(i, i) = diag;
  }
  for (int k = 0; k < n; ++k) {
    for (long j = 0; j < dim; ++j) {
      if (level_of(j, k, n) != kX) continue;
      const long i = replace_level(j, k, n, kE);
      h(i, j) += w3;
      h(j, i) += w3;
    }
  }
  return h;
}

MatC register_drive_structure(int n_register) {
  const int n = n_register;
  const long dim = hilbert_dim(n);
  MatC d = MatC::Zero(dim, dim);
  for (int k = 0; k < n; ++k)
    for (long j = 0; j < dim; ++j) {
      if (level_of(j, k, n) != kE) continue;
      for (int g : {kG0, kG1}) {
        const long i = replace_level(j, k, n, g);
        d(i, j) += 0.5;
        d(j, i) += 0.5;
      }
    }
  return d;
}

namespace {

// Exact half-step of the register dissipators. Per-atom channel maps commute
// across atoms, so they are composed sequentially, each applied exactly.
class RegisterDissipator {
 public:
  RegisterDissipator(const AtomLevelScheme& scheme, int n_register, double dt)
      : n_(n_register), dt_(dt), gamma_e_(scheme.gamma_e_per_s) {
    const long dim = hilbert_dim(n_);
    refill_coeff_ = 0.5 * (1.0 - std::exp(-2.0 * gamma_e_ * dt));
    factors_.reserve(n_);
    refills_.reserve(n_);
    for (int k = 0; k < n_; ++k) {
      Eigen::MatrixXd lam(dim, dim);
      std::vector<Refill> refs;
      for (long i = 0; i < dim; ++i) {
        const int a = level_of(i, k, n_);
        for (long j = 0; j < dim; ++j) {
          const int b = level_of(j, k, n_);
          const double da = dephased(a), db = dephased(b);
          const double both = (a == b && dephased(a) > 0.0) ? 1.0 : 0.0;
          double rate = 0.5 * scheme.gamma_dph_per_s * (da + db - 2.0 * both);
          rate += gamma_e_ * ((a == kE) + (b == kE));
          if (scheme.rydberg_decay)
            rate += 0.5 * scheme.gamma_ryd_per_s * ((a == kX) + (b == kX));
          lam(i, j) = std::exp(-rate * dt);
          if (a == b && (a == kG0 || a == kG1) && gamma_e_ > 0.0)
            refs.push_back({i, j, replace_level(i, k, n_, kE), replace_level(j, k, n_, kE)});
        }
      }
      factors_.push_back(std::move(lam));
      refills_.push_back(std::move(refs));
    }
  }

  void apply(MatC& rho) const {
    for (int k = 0; k < n_; ++k) {
      if (!refills_[k].empty()) {
        buffer_.resize(refills_[k].size());
        for (std::size_t r = 0; r < refills_[k].size(); ++r) {
          const Refill& f = refills_[k][r];
          buffer_[r] = refill_coeff_ * rho(f.src_i, f.src_j);
        }
      }
      rho.array() *= factors_[k].array().cast<Cplx>();
      if (!refills_[k].empty())
        for (std::size_t r = 0; r < refills_[k].size(); ++r) {
          const Refill& f = refills_[k][r];
          rho(f.dst_i, f.dst_j) += buffer_[r];
        }
    }
  }

 private:
  struct Refill {
    long dst_i, dst_j, src_i, src_j;
  };

  static double dephased(int lv) { return (lv == kG1 || lv == kE || lv == kX) ? 1.0 : 0.0; }

  int n_;
  double dt_;
  double gamma_e_;
  double refill_coeff_ = 0.0;
  std::vector<Eigen::MatrixXd> factors_;
  std::vector<std::vector<Refill>> refills_;
  mutable std::vector<Cplx> buffer_;
};

MatC hermitian_exp(const MatC& m, double scale) {
  const long n = m.rows();
  if (n >= 16) {
    // divide-and-conquer LAPACK path; noticeably faster than the QR solver
    // at the production block sizes
    MatC vecs = m;
    Eigen::VectorXd ev(n);
    const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', lapack_int(n),
                                    reinterpret_cast<lapack_complex_double*>(vecs.data()),
                                    lapack_int(n), ev.data());
    if (info != 0) throw NumericalError("hermitian_exp: zheevd failed");
    Eigen::VectorXcd phases(n);
    for (long i = 0; i < n; ++i) phases(i) = std::exp(Cplx(0.0, -scale * ev(i)));
    return vecs * phases.asDiagonal() * vecs.adjoint();
  }
  Eigen::SelfAdjointEigenSolver<MatC> es(m);
  const Eigen::VectorXd& ev = es.eigenvalues();
  Eigen::VectorXcd phases(ev.size());
  for (long i = 0; i < ev.size(); ++i) phases(i) = std::exp(Cplx(0.0, -scale * ev(i)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Commutator-free 4th-order step unitary for H(t) = A + f(t) B over
// [t0, t0 + h]. Gauss nodes; each factor is exp(-i (h/2)(A + 2 g B)).
class Cf4Step {
 public:
  Cf4Step(const MatC& a, const MatC& b) : a_(a), b_(b) {}

  MatC unitary(double t0, double h, const PulseSchedule& pulses) const {
    static const double root3_6 = std::sqrt(3.0) / 6.0;
    static const double c1 = 0.5 - root3_6, c2 = 0.5 + root3_6;
    static const double a1 = 0.25 + root3_6, a2 = 0.25 - root3_6;
    const double f1 = pulses.omega2_at(t0 + c1 * h);
    const double f2 = pulses.omega2_at(t0 + c2 * h);
    const double g_first = 2.0 * (a1 * f1 + a2 * f2);
    const double g_second = 2.0 * (a2 * f1 + a1 * f2);
    m_ = a_ + g_first * b_;
    const MatC e_first = hermitian_exp(m_, 0.5 * h);
    m_ = a_ + g_second * b_;
    const MatC e_second = hermitian_exp(m_, 0.5 * h);
    return e_second * e_first;
  }

 private:
  const MatC& a_;
  const MatC& b_;
  mutable MatC m_;
};

double control_cross_rate(const AtomLevelScheme& scheme) {
  // |0> vs |x| coherence of the control during the gate
  double r = 0.5 * scheme.gamma_dph_per_s;
  if (scheme.rydberg_decay) r += 0.5 * scheme.gamma_ryd_per_s;
  return r;
}

}  // namespace

MatC propagate_sector(const MatC& rho_in, const GateJob& job, ControlSector sector,
                      const MagnusOptions& opts) {
  if (opts.steps < 8) throw ValidationError("propagate_sector: too few steps");
  const MatC a = register_static_hamiltonian(job, sector);
  const MatC b = register_drive_structure(job.n_register);
  const double tau = job.pulses.pulse.tau_s;
  const double h = tau / opts.steps;
  const RegisterDissipator diss(job.scheme, job.n_register, 0.5 * h);
  const Cf4Step stepper(a, b);
  MatC rho = rho_in;
  for (int s = 0; s < opts.steps; ++s) {
    diss.apply(rho);
    const MatC u = stepper.unitary(s * h, h, job.pulses);
    rho = u * rho * u.adjoint();
    diss.apply(rho);
  }
  return rho;
}

MatC propagate_cross_block(const MatC& block_in, const GateJob& job, const MagnusOptions& opts) {
  if (opts.steps < 8) throw ValidationError("propagate_cross_block: too few steps");
  const MatC a_g = register_static_hamiltonian(job, ControlSector::ground);
  const MatC a_x = register_static_hamiltonian(job, ControlSector::rydberg);
  const MatC b = register_drive_structure(job.n_register);
  const double tau = job.pulses.pulse.tau_s;
  const double h = tau / opts.steps;
  const RegisterDissipator diss(job.scheme, job.n_register, 0.5 * h);
  const double scalar_half = std::exp(-control_cross_rate(job.scheme) * 0.5 * h);
  const Cf4Step step_g(a_g, b), step_x(a_x, b);
  MatC rho = block_in;
  for (int s = 0; s < opts.steps; ++s) {
    diss.apply(rho);
    rho *= scalar_half;
    const MatC ug = step_g.unitary(s * h, h, job.pulses);
    const MatC ux = step_x.unitary(s * h, h, job.pulses);
    rho = ug * rho * ux.adjoint();
    diss.apply(rho);
    rho *= scalar_half;
  }
  return rho;
}

MatC propagate_sector_rk45(const MatC& rho_in, const GateJob& job, ControlSector sector,
                           const IntegratorOptions& opts, double v_cap_rad_per_s) {
  GateJob capped = job;
  if (v_cap_rad_per_s > 0.0) {
    for (int k = 0; k < capped.v.v_control_register.size(); ++k) {
      double& v = capped.v.v_control_register(k);
      v = std::copysign(std::min(std::abs(v), v_cap_rad_per_s), v);
    }
    for (int i = 0; i < capped.v.v_register_register.rows(); ++i)
      for (int j = 0; j < capped.v.v_register_register.cols(); ++j) {
        double& v = capped.v.v_register_register(i, j);
        v = std::copysign(std::min(std::abs(v), v_cap_rad_per_s), v);
      }
  }
  const MatC a = register_static_hamiltonian(capped, sector);
  const MatC b = register_drive_structure(capped.n_register);
  const AtomLevelScheme scheme = capped.scheme;
  const int n = capped.n_register;

  // reuse the dense Lindblad rhs pieces in register space
  MatC h_buf(a.rows(), a.cols());
  const MatC zero_like = MatC::Zero(a.rows(), a.cols());
  const auto tables_rhs = [&](double t, const MatC& y, MatC& dy) {
    h_buf = a;
    const double amp = capped.pulses.omega2_at(t);
    if (amp != 0.0) h_buf += amp * b;
    dy.noalias() = Cplx(0.0, -1.0) * (h_buf * y);
    dy.noalias() += Cplx(0.0, 1.0) * (y * h_buf);
    // dissipators: same structure as the full engine, register space
    for (long i = 0; i < y.rows(); ++i)
      for (long j = 0; j < y.cols(); ++j) {
        double rate = 0.0;
        for (int k = 0; k < n; ++k) {
          const int la = level_of(i, k, n), lb = level_of(j, k, n);
          const double da = (la == kG1 || la == kE || la == kX) ? 1.0 : 0.0;
          const double db = (lb == kG1 || lb == kE || lb == kX) ? 1.0 : 0.0;
          const double both = (la == lb && da > 0.0) ? 1.0 : 0.0;
          rate += 0.5 * scheme.gamma_dph_per_s * (da + db - 2.0 * both);
          rate += scheme.gamma_e_per_s * ((la == kE) + (lb == kE));
          if (scheme.rydberg_decay) rate += 0.5 * scheme.gamma_ryd_per_s * ((la == kX) + (lb == kX));
        }
        dy(i, j) -= rate * y(i, j);
      }
    if (scheme.gamma_e_per_s > 0.0) {
      for (int k = 0; k < n; ++k)
        for (long i = 0; i < y.rows(); ++i) {
          const int li = level_of(i, k, n);
          if (li != kG0 && li != kG1) continue;
          const long ie = replace_level(i, k, n, kE);
          for (long j = 0; j < y.cols(); ++j) {
            if (level_of(j, k, n) != li) continue;
            const long je = replace_level(j, k, n, kE);
            dy(i, j) += scheme.gamma_e_per_s * y(ie, je);
          }
        }
    }
    (void)zero_like;
  };
  return integrate_matrix_ode(tables_rhs, rho_in, 0.0, capped.pulses.pulse.tau_s, opts);
}

PauliFit pauli_fit(const Eigen::Matrix2cd& k) {
  PauliFit f;
  f.alpha0 = 0.5 * (k(0, 0) + k(1, 1));
  f.a = 0.5 * (k(0, 1) + k(1, 0));
  f.b = 0.5 * (Cplx(0, 1) * (k(0, 1) - k(1, 0)));
  f.c = 0.5 * (k(0, 0) - k(1, 1));
  const Cplx amib = f.a - Cplx(0, 1) * f.b;
  f.abs_a_minus_ib = std::abs(amib);
  f.theta = -std::arg(amib);
  const double total = std::norm(f.alpha0) + std::norm(f.a) + std::norm(f.b) + std::norm(f.c);
  f.residual = total > 0.0 ? std::sqrt(std::norm(f.alpha0) / total) : 0.0;
  return f;
}

namespace {

MatC qubit_basis_op(int a, int b) {
  MatC e = MatC::Zero(kLevels, kLevels);
  e(a, b) = 1.0;
  return e;
}

Eigen::Matrix2cd qubit_block(const MatC& m) {
  Eigen::Matrix2cd q;
  q << m(0, 0), m(0, 1), m(1, 0), m(1, 1);
  return q;
}

Eigen::Matrix2cd closest_unitary(const Eigen::Matrix2cd& m) {
  Eigen::JacobiSVD<Eigen::Matrix2cd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace

ConditionalMapResult conditional_qubit_map(const GateJob& job, const MagnusOptions& opts) {
  if (job.n_register != 1) throw ValidationError("conditional_qubit_map: single-atom jobs only");
  ConditionalMapResult res;
  // Choi matrix over the qubit block, composite index (a*2 + i)
  Eigen::Matrix4cd choi = Eigen::Matrix4cd::Zero();
  double leak = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const MatC out = propagate_sector(qubit_basis_op(a, b), job, ControlSector::rydberg, opts);
      const Eigen::Matrix2cd q = qubit_block(out);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) choi(a * 2 + i, b * 2 + j) = q(i, j);
      if (a == b) {
        leak += 1.0 - (out(0, 0).real() + out(1, 1).real());
        if (a == 0) res.transfer = out(1, 1).real();
      }
    }
  res.leakage = 0.5 * leak;
  choi = 0.5 * (choi + choi.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(choi);
  const int top = 3;  // eigenvalues sorted ascending
  const double lam = es.eigenvalues()(top);
  const double total = std::max(es.eigenvalues().sum(), 1e-300);
  res.kraus_weight = lam / total;
  Eigen::Vector4cd v = es.eigenvectors().col(top);
  Eigen::Matrix2cd k;
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i) k(i, a) = std::sqrt(std::max(lam, 0.0)) * v(a * 2 + i);
  res.kraus = k;
  res.fit = pauli_fit(k);
  return res;
}

GatePairRecord cross_pair_record(const GateJob& job, const MagnusOptions& opts) {
  if (job.n_register != 1) throw ValidationError("cross_pair_record: single-atom jobs only");
  // two-sided map T(E_ab) ~ B E_ab U^dag; realign into a rank-1 structure
  Eigen::Matrix4cd r = Eigen::Matrix4cd::Zero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const MatC out = propagate_cross_block(qubit_basis_op(a, b), job, opts);
      const Eigen::Matrix2cd q = qubit_block(out);
      // row index (i + 2a) carries B(i,a); col index (j + 2b) carries conj(U(j,b))
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i + 2 * a, j + 2 * b) = q(i, j);
    }
  Eigen::JacobiSVD<Eigen::Matrix4cd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double sigma = svd.singularValues()(0);
  Eigen::Vector4cd bu = svd.matrixU().col(0);
  Eigen::Vector4cd uv = svd.matrixV().col(0);
  Eigen::Matrix2cd bm, um;
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i) bm(i, a) = bu(i + 2 * a);
  for (int b = 0; b < 2; ++b)
    for (int j = 0; j < 2; ++j) um(j, b) = std::conj(uv(j + 2 * b));
  // common-phase gauge: blocked branch trace real positive
  const Cplx tb = bm.trace();
  if (std::abs(tb) > 1e-12) {
    const Cplx ph = std::exp(Cplx(0.0, -std::arg(tb)));
    bm *= ph;
    um *= ph;
  }
  GatePairRecord rec;
  rec.u_blocked = closest_unitary(bm);
  rec.u_lifted = closest_unitary(um);
  rec.amplitude = 0.5 * sigma;
  rec.theta = pauli_fit(rec.u_lifted).theta;
  return rec;
}

double sector_transfer_probability(const GateJob& job, ControlSector sector,
                                   const MagnusOptions& opts) {
  if (job.n_register != 1) throw ValidationError("sector_transfer_probability: single-atom jobs only");
  const MatC out = propagate_sector(qubit_basis_op(0, 0), job, sector, opts);
  return out(1, 1).real();
}

CalibrationResult calibrate_amplitude_scale(const PulseParams& pulse, double lo, double hi,
                                            const MagnusOptions& opts) {
  GateJob job;
  job.scheme.delta_e_rad_per_s = pulse.delta_e_rad_per_s;
  job.scheme.gamma_e_per_s = 0.0;
  job.scheme.gamma_dph_per_s = 0.0;
  job.n_register = 1;
  job.v.v_control_register = Eigen::VectorXd::Zero(1);
  job.v.v_register_register = Eigen::MatrixXd::Zero(1, 1);
  job.pulses.pulse = pulse;
  job.pulses.omega3_scale = 0.0;  // fully-blockaded limit

  const auto transfer = [&](double scale) {
    GateJob j = job;
    j.pulses.amplitude_scale = scale;
    return sector_transfer_probability(j, ControlSector::ground, opts);
  };

  // golden-section maximization
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = transfer(x1), f2 = transfer(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-9; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = transfer(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = transfer(x1);
    }
  }
  CalibrationResult res;
  res.amplitude_scale = 0.5 * (a + b);
  res.transfer = transfer(res.amplitude_scale);
  return res;
}

}  // namespace qmetro
