#pragma once

#include <complex>
#include <vector>

#include "qem/errors.hpp"

namespace qem {

using cplx = std::complex<double>;

// Dense complex square matrix, row-major. Dimensions are tiny (2, 4, or 16
// for two-qubit Choi matrices), so everything is direct O(n^3) arithmetic.
class CMatrix {
public:
  CMatrix() = default;
  explicit CMatrix(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim) * dim) {}

  static CMatrix identity(int dim);

  int dim() const { return dim_; }

  cplx& operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * dim_ + c]; }
  const cplx& operator()(int r, int c) const {
    return a_[static_cast<std::size_t>(r) * dim_ + c];
  }

  CMatrix adjoint() const;
  CMatrix transpose() const;
  cplx trace() const;
  double frobenius_norm() const;

  // Largest entrywise deviation from A = A^dagger.
  double hermiticity_defect() const;
  bool is_hermitian(double tol = 1e-12) const { return hermiticity_defect() <= tol; }

  CMatrix& operator+=(const CMatrix& o);
  CMatrix& operator-=(const CMatrix& o);
  CMatrix& operator*=(cplx s);

  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
  friend CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
  friend CMatrix operator*(const CMatrix& a, const CMatrix& b);

private:
  int dim_ = 0;
  std::vector<cplx> a_;
};

// Complex column vector.
class CVector {
public:
  CVector() = default;
  explicit CVector(int dim) : v_(static_cast<std::size_t>(dim)) {}
  CVector(std::initializer_list<cplx> xs) : v_(xs) {}

  static CVector basis(int dim, int k);

  int dim() const { return static_cast<int>(v_.size()); }
  cplx& operator[](int i) { return v_[static_cast<std::size_t>(i)]; }
  const cplx& operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }

  double norm() const;
  CVector& operator+=(const CVector& o);
  CVector& operator-=(const CVector& o);
  CVector& operator*=(cplx s);
  friend CVector operator+(CVector a, const CVector& b) { return a += b; }
  friend CVector operator-(CVector a, const CVector& b) { return a -= b; }
  friend CVector operator*(cplx s, CVector a) { return a *= s; }

private:
  std::vector<cplx> v_;
};

cplx inner(const CVector& u, const CVector& v);           // <u|v>
CMatrix outer(const CVector& u, const CVector& v);        // |u><v|
CVector operator*(const CMatrix& m, const CVector& v);
CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector kron(const CVector& a, const CVector& b);

CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();

// Eigendecomposition of a Hermitian matrix: values descending, orthonormal
// eigenvector columns. Closed form for dim 2, cyclic Jacobi otherwise.
struct EigenSystem {
  std::vector<double> values;
  CMatrix vectors;
};
EigenSystem hermitian_eigensolve(const CMatrix& m);

// Unit-trace positive semidefinite Hermitian operator (2x2 memory qubit or
// 4x4 two-qubit). Construction validates the invariants.
class DensityMatrix {
public:
  explicit DensityMatrix(CMatrix m);

  static DensityMatrix pure(const CVector& psi);
  static DensityMatrix maximally_mixed(int dim);

  const CMatrix& matrix() const { return m_; }
  int dim() const { return m_.dim(); }

private:
  CMatrix m_;
};

// von Neumann entropy in bits. Eigenvalues in [-1e-10, 0) are clamped to 0;
// anything below the floor is an invariant violation.
double von_neumann_entropy(const DensityMatrix& rho);

// 1/2 sum |eig(a - b)| for Hermitian a, b of equal dimension. Unit trace is
// not required; the fixed-point objective compares trace-scaled operators.
double trace_distance(const CMatrix& a, const CMatrix& b);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double norm() const;
};

DensityMatrix bloch_to_density(const BlochVector& b);  // (I + b.sigma)/2
BlochVector density_to_bloch(const DensityMatrix& rho);

// Choi convention: C = sum_{ab} |a><b| (x) E(|a><b|), i.e. block (a,b) of C
// is E(|a><b|). For a d-dimensional channel C is d^2 x d^2 and the identity
// channel has C = d |Phi+><Phi+| with trace d.
CMatrix choi_from_kraus(const std::vector<CMatrix>& kraus);
std::vector<CMatrix> kraus_from_choi(const CMatrix& choi);  // throws NotCP

// Completely positive map held in both Kraus and Choi form. Possibly
// trace-decreasing (a conditioned branch of a measurement).
class QuantumChannel {
public:
  static QuantumChannel from_kraus(std::vector<CMatrix> kraus);
  static QuantumChannel from_choi(const CMatrix& choi);
  static QuantumChannel identity(int dim);
  static QuantumChannel unitary(const CMatrix& u);
  // (1-p) rho + p I/d tr(rho), as a uniform Pauli mixture.
  static QuantumChannel depolarizing(double p, int dim);

  int dim() const { return dim_; }
  const std::vector<CMatrix>& kraus_ops() const { return kraus_; }
  const CMatrix& choi() const { return choi_; }

  CMatrix apply(const CMatrix& rho) const;  // sum_k K rho K^dagger
  CMatrix apply(const DensityMatrix& rho) const { return apply(rho.matrix()); }
  CMatrix apply_via_choi(const CMatrix& rho) const;

  // a then b, i.e. (b o a)(rho) = b(a(rho)).
  static QuantumChannel compose(const QuantumChannel& b, const QuantumChannel& a);
  // Mixture p a + (1-p) b of same-dimension channels.
  static QuantumChannel mix(double p, const QuantumChannel& a, const QuantumChannel& b);
  // Re-derive a minimal Kraus set from the Choi matrix.
  QuantumChannel canonicalized() const;

  double trace_preservation_defect() const;  // ||sum K^dag K - I||_F
  bool is_trace_preserving(double tol = 1e-10) const {
    return trace_preservation_defect() <= tol;
  }

private:
  QuantumChannel() = default;
  int dim_ = 0;
  std::vector<CMatrix> kraus_;
  CMatrix choi_;
};

enum class Subsystem { memory, ancilla };

// Partial trace of a two-qubit operator in the fixed memory (x) ancilla
// ordering; `traced_out` names the discarded qubit.
CMatrix partial_trace(const CMatrix& op4, Subsystem traced_out);
DensityMatrix partial_trace(const DensityMatrix& rho4, Subsystem traced_out);

}  // namespace qem
