#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "qmetro/errors.hpp"

namespace qmetro {

// Four-level atom basis, ordered |0>, |1>, |e>, |x>.
enum Level : int { kG0 = 0, kG1 = 1, kE = 2, kX = 3 };

inline constexpr int kLevels = 4;

inline long hilbert_dim(int n_atoms) {
  long d = 1;
  for (int i = 0; i < n_atoms; ++i) d *= kLevels;
  return d;
}

// atom 0 owns the most significant base-4 digit of a basis index
inline int level_of(long index, int atom, int n_atoms) {
  for (int k = n_atoms - 1; k > atom; --k) index /= kLevels;
  return int(index % kLevels);
}

inline long replace_level(long index, int atom, int n_atoms, int new_level) {
  long stride = 1;
  for (int k = n_atoms - 1; k > atom; --k) stride *= kLevels;
  const int old = int((index / stride) % kLevels);
  return index + (long(new_level) - long(old)) * stride;
}

using Cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;

// |a><b| on one atom embedded in the n-atom product space
MatC site_transition_operator(int atom, int n_atoms, int a, int b);

MatC kron(const MatC& a, const MatC& b);

// number of atoms of the basis state occupying a given level
int count_level(long index, int n_atoms, int lv);

}  // namespace qmetro
