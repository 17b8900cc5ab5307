#include "qem/qmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qem {

namespace {

constexpr double kHermTol = 1e-10;
constexpr double kEigFloor = -1e-10;
constexpr double kLog2 = 0.6931471805599453094;

void require_same_dim(const CMatrix& a, const CMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatchError("matrix dimensions differ: " + std::to_string(a.dim()) +
                                 " vs " + std::to_string(b.dim()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// CMatrix / CVector
// ---------------------------------------------------------------------------

CMatrix CMatrix::identity(int dim) {
  CMatrix m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::adjoint() const {
  CMatrix r(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) r(i, j) = std::conj((*this)(j, i));
  return r;
}

CMatrix CMatrix::transpose() const {
  CMatrix r(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) r(i, j) = (*this)(j, i);
  return r;
}

cplx CMatrix::trace() const {
  cplx t = 0.0;
  for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double CMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const cplx& z : a_) s += std::norm(z);
  return std::sqrt(s);
}

double CMatrix::hermiticity_defect() const {
  double worst = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j)
      worst = std::max(worst, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
  return worst;
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
  require_same_dim(*this, o);
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
  require_same_dim(*this, o);
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
  return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
  for (cplx& z : a_) z *= s;
  return *this;
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  require_same_dim(a, b);
  const int n = a.dim();
  CMatrix r(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx(0.0)) continue;
      for (int j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

CVector CVector::basis(int dim, int k) {
  CVector v(dim);
  v[k] = 1.0;
  return v;
}

double CVector::norm() const {
  double s = 0.0;
  for (const cplx& z : v_) s += std::norm(z);
  return std::sqrt(s);
}

CVector& CVector::operator+=(const CVector& o) {
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

CVector& CVector::operator-=(const CVector& o) {
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

CVector& CVector::operator*=(cplx s) {
  for (cplx& z : v_) z *= s;
  return *this;
}

cplx inner(const CVector& u, const CVector& v) {
  if (u.dim() != v.dim()) throw DimensionMismatchError("vector dimensions differ");
  cplx s = 0.0;
  for (int i = 0; i < u.dim(); ++i) s += std::conj(u[i]) * v[i];
  return s;
}

CMatrix outer(const CVector& u, const CVector& v) {
  if (u.dim() != v.dim()) throw DimensionMismatchError("vector dimensions differ");
  CMatrix r(u.dim());
  for (int i = 0; i < u.dim(); ++i)
    for (int j = 0; j < u.dim(); ++j) r(i, j) = u[i] * std::conj(v[j]);
  return r;
}

CVector operator*(const CMatrix& m, const CVector& v) {
  if (m.dim() != v.dim()) throw DimensionMismatchError("matrix/vector dimensions differ");
  CVector r(v.dim());
  for (int i = 0; i < m.dim(); ++i) {
    cplx s = 0.0;
    for (int j = 0; j < m.dim(); ++j) s += m(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  const int na = a.dim();
  const int nb = b.dim();
  CMatrix r(na * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < na; ++j)
      for (int k = 0; k < nb; ++k)
        for (int l = 0; l < nb; ++l) r(i * nb + k, j * nb + l) = a(i, j) * b(k, l);
  return r;
}

CVector kron(const CVector& a, const CVector& b) {
  CVector r(a.dim() * b.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int k = 0; k < b.dim(); ++k) r[i * b.dim() + k] = a[i] * b[k];
  return r;
}

CMatrix pauli_x() {
  CMatrix m(2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

CMatrix pauli_y() {
  CMatrix m(2);
  m(0, 1) = cplx(0.0, -1.0);
  m(1, 0) = cplx(0.0, 1.0);
  return m;
}

CMatrix pauli_z() {
  CMatrix m(2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver
// ---------------------------------------------------------------------------

namespace {

EigenSystem eigensolve_2x2(const CMatrix& m) {
  const double a = m(0, 0).real();
  const double d = m(1, 1).real();
  const cplx b = m(0, 1);
  const double mean = 0.5 * (a + d);
  const double h = std::hypot(0.5 * (a - d), std::abs(b));
  const double lp = mean + h;
  const double lm = mean - h;

  EigenSystem es;
  es.values = {lp, lm};
  es.vectors = CMatrix(2);
  if (std::abs(b) < 1e-300) {
    // Diagonal matrix: standard basis ordered by eigenvalue.
    const int top = (a >= d) ? 0 : 1;
    es.vectors(top, 0) = 1.0;
    es.vectors(1 - top, 1) = 1.0;
    return es;
  }
  // (A - lp I) v = 0; pick the better-conditioned null-vector expression.
  cplx v0, v1;
  if (lp - a >= lp - d) {
    v0 = b;
    v1 = cplx(lp - a, 0.0);
  } else {
    v0 = cplx(lp - d, 0.0);
    v1 = std::conj(b);
  }
  const double n = std::sqrt(std::norm(v0) + std::norm(v1));
  v0 /= n;
  v1 /= n;
  es.vectors(0, 0) = v0;
  es.vectors(1, 0) = v1;
  // Orthogonal complement in 2D.
  es.vectors(0, 1) = -std::conj(v1);
  es.vectors(1, 1) = std::conj(v0);
  return es;
}

// Cyclic Jacobi with complex rotations; threshold 1e-12 on the off-diagonal
// Frobenius norm (scaled by the matrix norm when that exceeds 1), 100 sweeps.
EigenSystem eigensolve_jacobi(const CMatrix& m) {
  const int n = m.dim();
  CMatrix a = m;
  CMatrix v = CMatrix::identity(n);
  const double threshold = 1e-12 * std::max(1.0, m.frobenius_norm());

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * std::norm(a(p, q));
    if (std::sqrt(off) <= threshold) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double beta = std::abs(a(p, q));
        if (beta == 0.0) continue;
        const cplx phase = a(p, q) / beta;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (app - aqq) / (2.0 * beta);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // Unitary on the (p,q) plane: U[pp]=c, U[pq]=-s, U[qp]=e^{-i phi} s,
        // U[qq]=e^{-i phi} c; apply A <- U^dag A U and V <- V U.
        const cplx ephm = std::conj(phase);
        for (int k = 0; k < n; ++k) {
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = c * akp + s * ephm * akq;
          a(k, q) = -s * akp + c * ephm * akq;
        }
        for (int k = 0; k < n; ++k) {
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = c * apk + s * phase * aqk;
          a(q, k) = -s * apk + c * phase * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const cplx vkp = v(k, p);
          const cplx vkq = v(k, q);
          v(k, p) = c * vkp + s * ephm * vkq;
          v(k, q) = -s * vkp + c * ephm * vkq;
        }
      }
    }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i).real() > a(j, j).real(); });

  EigenSystem es;
  es.values.resize(static_cast<std::size_t>(n));
  es.vectors = CMatrix(n);
  for (int c = 0; c < n; ++c) {
    es.values[static_cast<std::size_t>(c)] = a(order[static_cast<std::size_t>(c)],
                                               order[static_cast<std::size_t>(c)])
                                                 .real();
    for (int r = 0; r < n; ++r) es.vectors(r, c) = v(r, order[static_cast<std::size_t>(c)]);
  }
  return es;
}

}  // namespace

EigenSystem hermitian_eigensolve(const CMatrix& m) {
  if (m.hermiticity_defect() > kHermTol) {
    throw NotHermitianError("matrix is not Hermitian within 1e-10");
  }
  if (m.dim() == 2) return eigensolve_2x2(m);
  return eigensolve_jacobi(m);
}

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(CMatrix m) : m_(std::move(m)) {
  if (m_.dim() != 2 && m_.dim() != 4) {
    throw InvalidStateError("density matrix must be 2x2 or 4x4");
  }
  if (m_.hermiticity_defect() > 1e-12) {
    throw InvalidStateError("density matrix not Hermitian within 1e-12");
  }
  if (std::abs(m_.trace() - cplx(1.0)) > 1e-10) {
    throw InvalidStateError("density matrix trace differs from 1 beyond 1e-10");
  }
  const EigenSystem es = hermitian_eigensolve(m_);
  if (es.values.back() < kEigFloor) {
    throw InvalidStateError("density matrix has eigenvalue below -1e-10");
  }
}

DensityMatrix DensityMatrix::pure(const CVector& psi) {
  CVector n = psi;
  const double nn = n.norm();
  if (nn == 0.0) throw InvalidStateError("cannot normalize the zero vector");
  n *= cplx(1.0 / nn);
  return DensityMatrix(outer(n, n));
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  CMatrix m = CMatrix::identity(dim);
  m *= cplx(1.0 / dim);
  return DensityMatrix(std::move(m));
}

double von_neumann_entropy(const DensityMatrix& rho) {
  const EigenSystem es = hermitian_eigensolve(rho.matrix());
  double bits = 0.0;
  for (double lam : es.values) {
    if (lam < kEigFloor) throw InvalidStateError("eigenvalue below -1e-10 in entropy");
    if (lam <= 0.0) continue;  // clamp float noise, 0 log 0 := 0
    bits -= lam * std::log(lam) / kLog2;
  }
  return std::max(bits, 0.0);
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
  require_same_dim(a, b);
  CMatrix d = a - b;
  if (d.hermiticity_defect() > kHermTol) {
    throw NotHermitianError("trace distance needs Hermitian operands");
  }
  // Canonicalize the sign of d so that swapping the arguments is bit-exact:
  // |eig(-d)| = |eig(d)|, so flipping costs nothing.
  [&d] {
    for (int i = 0; i < d.dim(); ++i)
      for (int j = 0; j < d.dim(); ++j) {
        const cplx z = d(i, j);
        const double key = z.real() != 0.0 ? z.real() : z.imag();
        if (key != 0.0) {
          if (key < 0.0) d *= cplx(-1.0);
          return;
        }
      }
  }();
  const EigenSystem es = hermitian_eigensolve(d);
  double s = 0.0;
  for (double lam : es.values) s += std::abs(lam);
  return 0.5 * s;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return trace_distance(a.matrix(), b.matrix());
}

// ---------------------------------------------------------------------------
// Bloch parameterization
// ---------------------------------------------------------------------------

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

DensityMatrix bloch_to_density(const BlochVector& b) {
  if (b.norm() > 1.0 + 1e-10) {
    throw OutOfBallError("Bloch vector norm exceeds 1");
  }
  CMatrix m(2);
  m(0, 0) = 0.5 * (1.0 + b.z);
  m(1, 1) = 0.5 * (1.0 - b.z);
  m(0, 1) = 0.5 * cplx(b.x, -b.y);
  m(1, 0) = 0.5 * cplx(b.x, b.y);
  return DensityMatrix(std::move(m));
}

BlochVector density_to_bloch(const DensityMatrix& rho) {
  if (rho.dim() != 2) throw DimensionMismatchError("Bloch vector requires a qubit state");
  const CMatrix& m = rho.matrix();
  BlochVector b;
  b.x = 2.0 * m(1, 0).real();
  b.y = 2.0 * m(1, 0).imag();
  b.z = (m(0, 0) - m(1, 1)).real();
  return b;
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

CMatrix choi_from_kraus(const std::vector<CMatrix>& kraus) {
  if (kraus.empty()) throw InvalidStateError("empty Kraus list");
  const int d = kraus.front().dim();
  CMatrix choi(d * d);
  for (const CMatrix& k : kraus) {
    if (k.dim() != d) throw DimensionMismatchError("mixed Kraus dimensions");
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            choi(a * d + i, b * d + j) += k(i, a) * std::conj(k(j, b));
  }
  return choi;
}

std::vector<CMatrix> kraus_from_choi(const CMatrix& choi) {
  const int d2 = choi.dim();
  const int d = d2 == 4 ? 2 : (d2 == 16 ? 4 : 0);
  if (d == 0) throw DimensionMismatchError("Choi matrix must be 4x4 or 16x16");
  const EigenSystem es = hermitian_eigensolve(choi);
  std::vector<CMatrix> kraus;
  for (int k = 0; k < d2; ++k) {
    const double lam = es.values[static_cast<std::size_t>(k)];
    if (lam < -1e-8) throw NotCPError("Choi eigenvalue below -1e-8");
    if (lam <= 1e-13) continue;
    const double w = std::sqrt(lam);
    CMatrix op(d);
    for (int a = 0; a < d; ++a)
      for (int i = 0; i < d; ++i) op(i, a) = w * es.vectors(a * d + i, k);
    kraus.push_back(std::move(op));
  }
  if (kraus.empty()) kraus.push_back(CMatrix(d));  // the zero map
  return kraus;
}

QuantumChannel QuantumChannel::from_kraus(std::vector<CMatrix> kraus) {
  QuantumChannel ch;
  ch.choi_ = choi_from_kraus(kraus);
  ch.kraus_ = std::move(kraus);
  ch.dim_ = ch.kraus_.front().dim();
  return ch;
}

QuantumChannel QuantumChannel::from_choi(const CMatrix& choi) {
  QuantumChannel ch;
  ch.kraus_ = kraus_from_choi(choi);
  ch.choi_ = choi;
  ch.dim_ = ch.kraus_.front().dim();
  return ch;
}

QuantumChannel QuantumChannel::identity(int dim) {
  return from_kraus({CMatrix::identity(dim)});
}

QuantumChannel QuantumChannel::unitary(const CMatrix& u) { return from_kraus({u}); }

QuantumChannel QuantumChannel::depolarizing(double p, int dim) {
  if (p < 0.0 || p > 1.0) throw InvalidParamsError("depolarizing weight outside [0,1]");
  std::vector<CMatrix> paulis1 = {CMatrix::identity(2), pauli_x(), pauli_y(), pauli_z()};
  std::vector<CMatrix> paulis;
  if (dim == 2) {
    paulis = paulis1;
  } else if (dim == 4) {
    for (const CMatrix& a : paulis1)
      for (const CMatrix& b : paulis1) paulis.push_back(kron(a, b));
  } else {
    throw DimensionMismatchError("depolarizing channel supports dim 2 or 4");
  }
  const double d2 = static_cast<double>(dim) * dim;
  std::vector<CMatrix> kraus;
  kraus.push_back(std::sqrt(1.0 - p + p / d2) * CMatrix::identity(dim));
  for (std::size_t i = 1; i < paulis.size(); ++i) {
    if (p > 0.0) kraus.push_back(std::sqrt(p / d2) * paulis[i]);
  }
  return from_kraus(std::move(kraus));
}

CMatrix QuantumChannel::apply(const CMatrix& rho) const {
  if (rho.dim() != dim_) throw DimensionMismatchError("channel/state dimensions differ");
  CMatrix out(dim_);
  for (const CMatrix& k : kraus_) out += k * rho * k.adjoint();
  return out;
}

CMatrix QuantumChannel::apply_via_choi(const CMatrix& rho) const {
  if (rho.dim() != dim_) throw DimensionMismatchError("channel/state dimensions differ");
  const int d = dim_;
  CMatrix out(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      cplx s = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) s += rho(a, b) * choi_(a * d + i, b * d + j);
      out(i, j) = s;
    }
  return out;
}

QuantumChannel QuantumChannel::compose(const QuantumChannel& b, const QuantumChannel& a) {
  if (a.dim() != b.dim()) throw DimensionMismatchError("composed channel dimensions differ");
  std::vector<CMatrix> kraus;
  kraus.reserve(a.kraus_.size() * b.kraus_.size());
  for (const CMatrix& kb : b.kraus_)
    for (const CMatrix& ka : a.kraus_) kraus.push_back(kb * ka);
  return from_kraus(std::move(kraus));
}

QuantumChannel QuantumChannel::mix(double p, const QuantumChannel& a, const QuantumChannel& b) {
  if (a.dim() != b.dim()) throw DimensionMismatchError("mixed channel dimensions differ");
  std::vector<CMatrix> kraus;
  for (const CMatrix& k : a.kraus_) kraus.push_back(std::sqrt(p) * k);
  for (const CMatrix& k : b.kraus_) kraus.push_back(std::sqrt(1.0 - p) * k);
  return from_kraus(std::move(kraus));
}

QuantumChannel QuantumChannel::canonicalized() const { return from_choi(choi_); }

double QuantumChannel::trace_preservation_defect() const {
  CMatrix s(dim_);
  for (const CMatrix& k : kraus_) s += k.adjoint() * k;
  s -= CMatrix::identity(dim_);
  return s.frobenius_norm();
}

// ---------------------------------------------------------------------------
// Partial trace (memory (x) ancilla ordering)
// ---------------------------------------------------------------------------

CMatrix partial_trace(const CMatrix& op4, Subsystem traced_out) {
  if (op4.dim() != 4) throw DimensionMismatchError("partial trace expects a 4x4 operator");
  CMatrix out(2);
  if (traced_out == Subsystem::ancilla) {
    for (int m = 0; m < 2; ++m)
      for (int mp = 0; mp < 2; ++mp)
        for (int a = 0; a < 2; ++a) out(m, mp) += op4(2 * m + a, 2 * mp + a);
  } else {
    for (int a = 0; a < 2; ++a)
      for (int ap = 0; ap < 2; ++ap)
        for (int m = 0; m < 2; ++m) out(a, ap) += op4(2 * m + a, 2 * m + ap);
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho4, Subsystem traced_out) {
  return DensityMatrix(partial_trace(rho4.matrix(), traced_out));
}

}  // namespace qem
