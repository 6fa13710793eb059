#include "qmetro/lindblad.hpp"

#include <cmath>

#include "qmetro/units.hpp"

namespace qmetro {

void AtomLevelScheme::validate() const {
  if (delta_e_rad_per_s <= 0.0) throw ValidationError("AtomLevelScheme: Delta_e must be > 0");
  if (gamma_e_per_s < 0.0 || gamma_dph_per_s < 0.0 || gamma_ryd_per_s < 0.0)
    throw ValidationError("AtomLevelScheme: rates must be non-negative");
}

DensityMatrix DensityMatrix::zero(int n_atoms) {
  DensityMatrix d;
  d.n_atoms = n_atoms;
  d.rho = MatC::Zero(hilbert_dim(n_atoms), hilbert_dim(n_atoms));
  return d;
}

DensityMatrix DensityMatrix::product_mixture(int n_atoms, double p_control, double p_register) {
  if (n_atoms < 1) throw ValidationError("product_mixture: need at least the control atom");
  Eigen::Vector4cd ctrl, reg;
  ctrl << 0.5 * (1.0 + p_control), 0.5 * (1.0 - p_control), 0.0, 0.0;
  reg << 0.5 * (1.0 + p_register), 0.5 * (1.0 - p_register), 0.0, 0.0;
  MatC rho = ctrl.asDiagonal();
  for (int k = 1; k < n_atoms; ++k) rho = kron(rho, MatC(reg.asDiagonal()));
  DensityMatrix d;
  d.n_atoms = n_atoms;
  d.rho = std::move(rho);
  return d;
}

double DensityMatrix::trace_defect() const { return std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag()); }

double DensityMatrix::hermiticity_defect() const {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  MatC h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<MatC> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void DensityMatrix::check_invariants(double trace_tol, double herm_tol, double eig_floor) const {
  if (trace_defect() > trace_tol) throw NumericalError("density matrix: trace defect above tolerance");
  if (hermiticity_defect() > herm_tol)
    throw NumericalError("density matrix: hermiticity defect above tolerance");
  if (min_eigenvalue() < eig_floor)
    throw NumericalError("density matrix: negative eigenvalue below floor");
}

namespace {

// time-independent part: Delta_e diagonals, Omega_3 couplings, interactions
MatC static_hamiltonian(const AtomLevelScheme& scheme, int n_atoms,
                        const Eigen::MatrixXd& v_rad_per_s, const PulseSchedule& pulses,
                        const std::vector<bool>& driven) {
  const long dim = hilbert_dim(n_atoms);
  MatC h = MatC::Zero(dim, dim);
  const double w3 = 0.5 * pulses.omega3();
  for (long i = 0; i < dim; ++i) {
    double diag = scheme.delta_e_rad_per_s * count_level(i, n_atoms, kE);
    for (int a = 0; a < n_atoms; ++a) {
      if (level_of(i, a, n_atoms) != kX) continue;
      for (int b = a + 1; b < n_atoms; ++b)
        if (level_of(i, b, n_atoms) == kX) diag += v_rad_per_s(a, b);
    }
    h(i, i) = diag;
  }
  for (int k = 0; k < n_atoms; ++k) {
    if (!driven[k]) continue;
    for (long j = 0; j < dim; ++j) {
      if (level_of(j, k, n_atoms) != kX) continue;
      const long i = replace_level(j, k, n_atoms, kE);
      h(i, j) += w3;
      h(j, i) += w3;
    }
  }
  return h;
}

// unit-amplitude Raman drive structure (multiplied by Omega_2(t)/2)
MatC drive_structure(int n_atoms, const std::vector<bool>& driven) {
  const long dim = hilbert_dim(n_atoms);
  MatC d = MatC::Zero(dim, dim);
  for (int k = 0; k < n_atoms; ++k) {
    if (!driven[k]) continue;
    for (long j = 0; j < dim; ++j) {
      if (level_of(j, k, n_atoms) != kE) continue;
      for (int g : {kG0, kG1}) {
        const long i = replace_level(j, k, n_atoms, g);
        d(i, j) += 1.0;
        d(j, i) += 1.0;
      }
    }
  }
  return d;
}

std::vector<bool> resolve_driven(int n_atoms, const std::vector<bool>& driven) {
  if (driven.empty()) return std::vector<bool>(n_atoms, true);
  if (int(driven.size()) != n_atoms) throw ValidationError("driven mask size mismatch");
  return driven;
}

void check_pair_shifts(int n_atoms, const Eigen::MatrixXd& v) {
  if (v.rows() != n_atoms || v.cols() != n_atoms)
    throw ValidationError("pair shift table has wrong dimensions");
  if ((v - v.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ValidationError("pair shift table must be symmetric");
  for (int i = 0; i < n_atoms; ++i)
    if (v(i, i) != 0.0) throw ValidationError("pair shift table must have zero diagonal");
}

}  // namespace

MatC build_hamiltonian(const AtomLevelScheme& scheme, int n_atoms,
                       const Eigen::MatrixXd& pair_shifts_rad_per_s, double t_s,
                       const PulseSchedule& pulses, const std::vector<bool>& driven) {
  scheme.validate();
  if (n_atoms < 1 || n_atoms > 4)
    throw ValidationError("build_hamiltonian: full engine supports 1..4 atoms");
  check_pair_shifts(n_atoms, pair_shifts_rad_per_s);
  const auto mask = resolve_driven(n_atoms, driven);
  MatC h = static_hamiltonian(scheme, n_atoms, pair_shifts_rad_per_s, pulses, mask);
  h += (0.5 * pulses.omega2_at(t_s)) * drive_structure(n_atoms, mask);
  return h;
}

namespace {

struct DissipatorTables {
  MatC decay;  // entrywise decay rates (real values stored complex for cheap apply)
  int n_atoms = 0;
  double gamma_e = 0.0;

  static bool is_dephased(int lv) { return lv == kG1 || lv == kE || lv == kX; }

  static DissipatorTables build(const AtomLevelScheme& scheme, int n_atoms) {
    const long dim = hilbert_dim(n_atoms);
    DissipatorTables t;
    t.n_atoms = n_atoms;
    t.gamma_e = scheme.gamma_e_per_s;
    t.decay = MatC::Zero(dim, dim);
    std::vector<std::array<int, 4>> lv(dim);
    for (long i = 0; i < dim; ++i)
      for (int k = 0; k < n_atoms; ++k) lv[i][k] = level_of(i, k, n_atoms);
    for (long i = 0; i < dim; ++i) {
      for (long j = 0; j < dim; ++j) {
        double deph = 0.0;
        double ne = 0.0, nx = 0.0;
        for (int k = 0; k < n_atoms; ++k) {
          const int a = lv[i][k], b = lv[j][k];
          const double da = is_dephased(a) ? 1.0 : 0.0;
          const double db = is_dephased(b) ? 1.0 : 0.0;
          const double both = (a == b && is_dephased(a)) ? 1.0 : 0.0;
          deph += da + db - 2.0 * both;
          ne += (a == kE) + (b == kE);
          nx += (a == kX) + (b == kX);
        }
        t.decay(i, j) = 0.5 * scheme.gamma_dph_per_s * deph + scheme.gamma_e_per_s * ne +
                        (scheme.rydberg_decay ? 0.5 * scheme.gamma_ryd_per_s * nx : 0.0);
      }
    }
    return t;
  }

  // dy += dissipator(y)
  void accumulate(const MatC& y, MatC& dy) const {
    dy.array() -= decay.array() * y.array();
    if (gamma_e == 0.0) return;
    const long dim = y.rows();
    for (int k = 0; k < n_atoms; ++k) {
      for (long i = 0; i < dim; ++i) {
        const int li = level_of(i, k, n_atoms);
        if (li != kG0 && li != kG1) continue;
        const long ie = replace_level(i, k, n_atoms, kE);
        for (long j = 0; j < dim; ++j) {
          const int lj = level_of(j, k, n_atoms);
          if (lj != li) continue;
          const long je = replace_level(j, k, n_atoms, kE);
          dy(i, j) += gamma_e * y(ie, je);
        }
      }
    }
  }
};

}  // namespace

MatC lindblad_rhs(const MatC& rho, const MatC& hamiltonian, const AtomLevelScheme& scheme,
                  int n_atoms) {
  scheme.validate();
  const DissipatorTables tables = DissipatorTables::build(scheme, n_atoms);
  MatC dy = Cplx(0.0, -1.0) * (hamiltonian * rho - rho * hamiltonian);
  tables.accumulate(rho, dy);
  return dy;
}

MatC integrate_matrix_ode(const MatrixRhs& rhs, MatC y, double t0, double t1,
                          const IntegratorOptions& opts, IntegrationReport* report) {
  // Dormand-Prince 5(4) coefficients
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                      b6 = 11.0 / 84;
  static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                      e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                      e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  if (t1 < t0) throw ValidationError("integrate: t1 < t0");
  const double span = t1 - t0;
  if (span == 0.0) return y;

  MatC k1(y.rows(), y.cols()), k2(y.rows(), y.cols()), k3(y.rows(), y.cols()),
      k4(y.rows(), y.cols()), k5(y.rows(), y.cols()), k6(y.rows(), y.cols()),
      k7(y.rows(), y.cols()), ytmp(y.rows(), y.cols()), y5(y.rows(), y.cols());

  double t = t0;
  double h = opts.initial_step_s > 0.0 ? opts.initial_step_s : span * 1e-6;
  long steps = 0, rejected = 0;
  bool have_k1 = false;

  while (t < t1) {
    if (steps >= opts.max_steps) throw NumericalError("integrate: max step count exceeded");
    if (h < span * 1e-14) throw NumericalError("integrate: step-size underflow");
    if (t + h > t1) h = t1 - t;

    if (!have_k1) rhs(t, y, k1);
    ytmp = y + h * a21 * k1;
    rhs(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, ytmp, k6);
    y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, y5, k7);

    // scaled max-norm of the embedded error
    double err = 0.0;
    const long n = y.size();
    const Cplx* yp = y.data();
    const Cplx* y5p = y5.data();
    const Cplx *k1p = k1.data(), *k3p = k3.data(), *k4p = k4.data(), *k5p = k5.data(),
               *k6p = k6.data(), *k7p = k7.data();
    for (long i = 0; i < n; ++i) {
      const Cplx de = h * (e1 * k1p[i] + e3 * k3p[i] + e4 * k4p[i] + e5 * k5p[i] + e6 * k6p[i] +
                           e7 * k7p[i]);
      const double scale = opts.atol + opts.rtol * std::max(std::abs(yp[i]), std::abs(y5p[i]));
      err = std::max(err, std::abs(de) / scale);
    }

    if (err <= 1.0) {
      t += h;
      y.swap(y5);
      k1.swap(k7);  // FSAL
      have_k1 = true;
      ++steps;
    } else {
      ++rejected;
      have_k1 = false;
    }
    const double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::min(5.0, std::max(0.2, factor));
  }

  if (report) {
    report->steps = steps;
    report->rejected = rejected;
  }
  return y;
}

DensityMatrix integrate(const DensityMatrix& rho0, const AtomLevelScheme& scheme,
                        const PulseSchedule& pulses, const Eigen::MatrixXd& pair_shifts_rad_per_s,
                        const IntegratorOptions& opts, IntegrationReport* report,
                        const std::vector<bool>& driven) {
  scheme.validate();
  const int n = rho0.n_atoms;
  check_pair_shifts(n, pair_shifts_rad_per_s);
  const auto mask = resolve_driven(n, driven);
  const MatC h_static = static_hamiltonian(scheme, n, pair_shifts_rad_per_s, pulses, mask);
  const MatC h_drive = drive_structure(n, mask);
  const DissipatorTables tables = DissipatorTables::build(scheme, n);

  MatC h_buf(h_static.rows(), h_static.cols());
  const MatrixRhs rhs = [&](double t, const MatC& y, MatC& dy) {
    h_buf = h_static;
    const double amp = 0.5 * pulses.omega2_at(t);
    if (amp != 0.0) h_buf += amp * h_drive;
    dy.noalias() = Cplx(0.0, -1.0) * (h_buf * y);
    dy.noalias() += Cplx(0.0, 1.0) * (y * h_buf);
    tables.accumulate(y, dy);
  };

  DensityMatrix out;
  out.n_atoms = n;
  out.rho = integrate_matrix_ode(rhs, rho0.rho, 0.0, pulses.pulse.tau_s, opts, report);
  if (report) {
    DensityMatrix probe{n, out.rho};
    report->final_trace_defect = probe.trace_defect();
    report->final_hermiticity_defect = probe.hermiticity_defect();
    report->final_min_eigenvalue = probe.min_eigenvalue();
  }
  return out;
}

DensityMatrix apply_hadamard_control(const DensityMatrix& in) {
  const double s = 1.0 / std::sqrt(2.0);
  MatC u4 = MatC::Identity(kLevels, kLevels);
  u4(0, 0) = s;
  u4(0, 1) = s;
  u4(1, 0) = s;
  u4(1, 1) = -s;
  MatC u = u4;
  for (int k = 1; k < in.n_atoms; ++k) u = kron(u, MatC::Identity(kLevels, kLevels));
  DensityMatrix out;
  out.n_atoms = in.n_atoms;
  out.rho = u * in.rho * u.adjoint();
  return out;
}

DensityMatrix apply_free_evolution(const DensityMatrix& in, double omega_rad_per_s, double t_s) {
  const long dim = in.rho.rows();
  const int n = in.n_atoms;
  Eigen::VectorXd ones(dim);
  for (long i = 0; i < dim; ++i) {
    int c = 0;
    for (int k = 1; k < n; ++k)
      if (level_of(i, k, n) == kG1) ++c;
    ones(i) = double(c);
  }
  DensityMatrix out;
  out.n_atoms = n;
  out.rho = in.rho;
  const double phi = omega_rad_per_s * t_s;
  for (long i = 0; i < dim; ++i)
    for (long j = 0; j < dim; ++j) {
      const double d = ones(i) - ones(j);
      if (d != 0.0) out.rho(i, j) *= std::exp(Cplx(0.0, -phi * d));
    }
  return out;
}

DensityMatrix apply_control_rydberg_swap(const DensityMatrix& in) {
  const long dim = in.rho.rows();
  const int n = in.n_atoms;
  std::vector<long> perm(dim);
  for (long i = 0; i < dim; ++i) {
    const int lv = level_of(i, 0, n);
    long j = i;
    if (lv == kG1) j = replace_level(i, 0, n, kX);
    else if (lv == kX) j = replace_level(i, 0, n, kG1);
    perm[i] = j;
  }
  DensityMatrix out = DensityMatrix::zero(n);
  for (long i = 0; i < dim; ++i)
    for (long j = 0; j < dim; ++j) out.rho(perm[i], perm[j]) = in.rho(i, j);
  return out;
}

ControlReduction partial_trace_register(const DensityMatrix& in, double leakage_threshold) {
  const int n = in.n_atoms;
  const long dim = in.rho.rows();
  Eigen::Matrix2cd rc = Eigen::Matrix2cd::Zero();
  double qubit_population = 0.0;
  for (long i = 0; i < dim; ++i) {
    bool reg_qubit = true;
    for (int k = 1; k < n; ++k) {
      const int lv = level_of(i, k, n);
      if (lv != kG0 && lv != kG1) {
        reg_qubit = false;
        break;
      }
    }
    if (!reg_qubit) continue;
    const int a = level_of(i, 0, n);
    if (a != kG0 && a != kG1) continue;
    qubit_population += in.rho(i, i).real();
    for (int b : {kG0, kG1}) {
      const long j = replace_level(i, 0, n, b);
      rc(a, b) += in.rho(i, j);
    }
  }
  ControlReduction red;
  red.leakage = std::max(0.0, in.rho.trace().real() - qubit_population);
  if (red.leakage > leakage_threshold)
    throw NumericalError("partial_trace_register: leakage above threshold");
  if (qubit_population <= 0.0)
    throw NumericalError("partial_trace_register: no population in the qubit subspace");
  red.rho_control = rc / qubit_population;
  return red;
}

}  // namespace qmetro
