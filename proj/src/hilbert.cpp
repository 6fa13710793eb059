#include "qmetro/hilbert.hpp"

namespace qmetro {

MatC site_transition_operator(int atom, int n_atoms, int a, int b) {
  if (atom < 0 || atom >= n_atoms) throw ValidationError("site operator: atom index out of range");
  const long dim = hilbert_dim(n_atoms);
  MatC op = MatC::Zero(dim, dim);
  for (long j = 0; j < dim; ++j) {
    if (level_of(j, atom, n_atoms) != b) continue;
    const long i = replace_level(j, atom, n_atoms, a);
    op(i, j) = 1.0;
  }
  return op;
}

MatC kron(const MatC& a, const MatC& b) {
  MatC out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

int count_level(long index, int n_atoms, int lv) {
  int c = 0;
  for (int k = 0; k < n_atoms; ++k)
    if (level_of(index, k, n_atoms) == lv) ++c;
  return c;
}

}  // namespace qmetro
