#include "circuit_oracle.hpp"

namespace oracle {

namespace {

using MatC = Eigen::MatrixXcd;
using Cplx = std::complex<double>;

int popcount_register(long idx, int n_register) {
  int c = 0;
  for (int b = 0; b < n_register; ++b)
    if (idx & (1L << b)) ++c;
  return c;
}

}  // namespace

JointProbabilities simulate_circuit(int n_register, double p_c, double p_r, double omega_t) {
  const int nq = n_register + 1;
  const long dim = 1L << nq;
  const long control_bit = 1L << n_register;  // control = highest bit
  const long register_mask = control_bit - 1;

  // initial product state of qubit mixtures
  Eigen::VectorXd diag(dim);
  for (long i = 0; i < dim; ++i) {
    double w = (i & control_bit) ? 0.5 * (1.0 - p_c) : 0.5 * (1.0 + p_c);
    for (int b = 0; b < n_register; ++b)
      w *= (i & (1L << b)) ? 0.5 * (1.0 - p_r) : 0.5 * (1.0 + p_r);
    diag(i) = w;
  }
  MatC rho = diag.cast<Cplx>().asDiagonal();

  // Hadamard on the control qubit
  MatC had = MatC::Zero(dim, dim);
  const double s = 1.0 / std::sqrt(2.0);
  for (long i = 0; i < dim; ++i) {
    const long j = i ^ control_bit;
    if (i & control_bit) {
      had(i, i) = -s;
      had(j, i) = s;
    } else {
      had(i, i) = s;
      had(j, i) = s;
    }
  }

  // fan-out CNOT: flip every register qubit when the control is |1>
  MatC cnot = MatC::Zero(dim, dim);
  for (long i = 0; i < dim; ++i) {
    const long j = (i & control_bit) ? (i ^ register_mask) : i;
    cnot(j, i) = 1.0;
  }

  // u_omega on each register qubit: phase on |1>
  MatC evol = MatC::Zero(dim, dim);
  for (long i = 0; i < dim; ++i) {
    const int ones = popcount_register(i, n_register);
    evol(i, i) = std::exp(Cplx(0.0, -omega_t * double(ones)));
  }

  rho = had * rho * had.adjoint();
  rho = cnot * rho * cnot.adjoint();
  rho = evol * rho * evol.adjoint();
  rho = cnot * rho * cnot.adjoint();
  rho = had * rho * had.adjoint();

  JointProbabilities out;
  out.p.assign(2, std::vector<double>(n_register + 1, 0.0));
  for (long i = 0; i < dim; ++i) {
    const int k = (i & control_bit) ? 1 : 0;
    const int n = popcount_register(i, n_register);
    out.p[k][n] += rho(i, i).real();
  }
  return out;
}

}  // namespace oracle
