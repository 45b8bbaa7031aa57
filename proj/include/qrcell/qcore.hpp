#pragma once

// Dense density-matrix register math for small qubit registers (dim <= 16).
//
// Conventions used throughout the library:
//   - Registers are ordered big-endian: the first qubit is the most
//     significant bit of the basis index.
//   - The four-qubit protocol register is (atom1, photonA, atom2, photonB).
//   - Atomic basis: |+> -> 0, |-> -> 1.  Photonic basis: |L> -> 0, |R> -> 1.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace qrcell {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;

constexpr double kPi = 3.141592653589793238462643383279502884;

inline cmat identity(int dim) { return cmat::Identity(dim, dim); }

// Basis ket |b_0 b_1 ... b_{n-1}> with b_0 the most significant bit.
inline cvec basis_ket(std::initializer_list<int> bits) {
  int idx = 0;
  for (int b : bits) {
    if (b != 0 && b != 1) throw std::invalid_argument("basis_ket: bits must be 0 or 1");
    idx = (idx << 1) | b;
  }
  cvec v = cvec::Zero(1 << bits.size());
  v(idx) = 1.0;
  return v;
}

inline cmat dm(const cvec& psi) { return psi * psi.adjoint(); }

inline cmat kron(const cmat& a, const cmat& b) {
  cmat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline cvec kron(const cvec& a, const cvec& b) {
  cvec out(a.size() * b.size());
  for (int i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline int num_qubits(const cmat& rho) {
  int n = 0;
  while ((1 << n) < rho.rows()) ++n;
  if ((1 << n) != rho.rows() || rho.rows() != rho.cols())
    throw std::invalid_argument("num_qubits: dimension is not a power of two");
  return n;
}

// Embed an operator acting on the listed qubits (in the given order) into an
// n-qubit register; all other qubits are untouched.
inline cmat embed(const cmat& op, const std::vector<int>& qubits, int n) {
  const int dim = 1 << n;
  const int m = static_cast<int>(qubits.size());
  if (op.rows() != (1 << m)) throw std::invalid_argument("embed: operator dim mismatch");
  for (int q : qubits)
    if (q < 0 || q >= n) throw std::invalid_argument("embed: qubit index out of range");
  cmat out = cmat::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      int sub_i = 0, sub_j = 0;
      bool rest_equal = true;
      int mask = 0;
      for (int k = 0; k < m; ++k) {
        const int bit = n - 1 - qubits[k];  // big-endian position
        sub_i = (sub_i << 1) | ((i >> bit) & 1);
        sub_j = (sub_j << 1) | ((j >> bit) & 1);
        mask |= 1 << bit;
      }
      rest_equal = (i & ~mask) == (j & ~mask);
      if (rest_equal) out(i, j) = op(sub_i, sub_j);
    }
  }
  return out;
}

// Partial trace keeping the listed qubits (preserving their current order).
inline cmat partial_trace_keep(const cmat& rho, const std::vector<int>& keep, int n) {
  const int m = static_cast<int>(keep.size());
  const int dim_out = 1 << m;
  cmat out = cmat::Zero(dim_out, dim_out);
  const int dim = 1 << n;
  std::vector<int> keep_bit(m);
  for (int k = 0; k < m; ++k) keep_bit[k] = n - 1 - keep[k];
  for (int i = 0; i < dim; ++i) {
    int a = 0;
    for (int k = 0; k < m; ++k) a = (a << 1) | ((i >> keep_bit[k]) & 1);
    for (int j = 0; j < dim; ++j) {
      // traced-out bits must agree between row and column index
      bool same = true;
      for (int b = 0; b < n && same; ++b) {
        const int bit = n - 1 - b;
        bool kept = false;
        for (int q : keep) kept |= (q == b);
        if (!kept && (((i >> bit) & 1) != ((j >> bit) & 1))) same = false;
      }
      if (!same) continue;
      int bcol = 0;
      for (int k = 0; k < m; ++k) bcol = (bcol << 1) | ((j >> keep_bit[k]) & 1);
      out(a, bcol) += rho(i, j);
    }
  }
  return out;
}

inline cmat apply_unitary(const cmat& rho, const cmat& u) { return u * rho * u.adjoint(); }

inline cmat projector(const cvec& psi) { return dm(psi); }

// <psi| rho |psi> for a pure target.
inline double fidelity_with_pure(const cmat& rho, const cvec& psi) {
  return std::real(cplx(psi.adjoint() * rho * psi));
}

inline double purity(const cmat& rho) { return std::real((rho * rho).trace()); }

inline double trace_real(const cmat& rho) { return std::real(rho.trace()); }

struct PhysicalityReport {
  bool hermitian = false;
  bool unit_trace = false;
  bool positive = false;
  double min_eigenvalue = 0.0;
  bool ok() const { return hermitian && unit_trace && positive; }
};

inline PhysicalityReport check_density_matrix(const cmat& rho, double tol = 1e-9) {
  PhysicalityReport r;
  r.hermitian = (rho - rho.adjoint()).cwiseAbs().maxCoeff() < tol;
  r.unit_trace = std::abs(rho.trace() - cplx(1.0, 0.0)) < tol;
  Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.positive = r.min_eigenvalue > -tol;
  return r;
}

// Single-qubit Pauli matrices.
inline cmat pauli_i() { return identity(2); }
inline cmat pauli_x() {
  cmat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline cmat pauli_y() {
  cmat m(2, 2);
  m << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
  return m;
}
inline cmat pauli_z() {
  cmat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

}  // namespace qrcell
