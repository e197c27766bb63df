#include "ionbell/qmath.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ionbell::qmath {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(Vector amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.size() == 0) throw std::invalid_argument("StateVector: empty");
}

StateVector::StateVector(std::initializer_list<Complex> amplitudes)
    : amps_(static_cast<Eigen::Index>(amplitudes.size())) {
  if (amplitudes.size() == 0) throw std::invalid_argument("StateVector: empty");
  Eigen::Index i = 0;
  for (const auto& a : amplitudes) amps_(i++) = a;
}

StateVector StateVector::normalized(Vector amplitudes) {
  StateVector v(std::move(amplitudes));
  if (!v.is_normalized()) {
    throw std::invalid_argument("StateVector: squared norm " + std::to_string(v.norm_squared()) +
                                " is not 1");
  }
  return v;
}

bool StateVector::is_normalized(double tol) const {
  return std::abs(norm_squared() - 1.0) <= tol;
}

StateVector StateVector::normalize() const {
  const double n = amps_.norm();
  if (n == 0.0) throw std::invalid_argument("StateVector: cannot normalize the zero vector");
  return StateVector(Vector(amps_ / n));
}

StateVector StateVector::operator+(const StateVector& o) const {
  require_same_dim(dim(), o.dim(), "StateVector +");
  return StateVector(Vector(amps_ + o.amps_));
}

StateVector StateVector::operator-(const StateVector& o) const {
  require_same_dim(dim(), o.dim(), "StateVector -");
  return StateVector(Vector(amps_ - o.amps_));
}

Complex inner(const StateVector& a, const StateVector& b) {
  require_same_dim(a.dim(), b.dim(), "inner");
  return a.amplitudes().dot(b.amplitudes());  // Eigen conjugates the left operand
}

// ---------------------------------------------------------------------------
// Operator

Operator::Operator(Matrix entries) : m_(std::move(entries)) {
  if (m_.rows() == 0 || m_.cols() == 0) throw std::invalid_argument("Operator: empty");
}

Operator Operator::identity(std::size_t dim) {
  return Operator(Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
}

Operator Operator::zero(std::size_t dim_out, std::size_t dim_in) {
  return Operator(
      Matrix::Zero(static_cast<Eigen::Index>(dim_out), static_cast<Eigen::Index>(dim_in)));
}

StateVector Operator::apply(const StateVector& v) const {
  require_same_dim(dim_in(), v.dim(), "Operator::apply");
  return StateVector(Vector(m_ * v.amplitudes()));
}

Operator Operator::operator*(const Operator& o) const {
  require_same_dim(dim_in(), o.dim_out(), "Operator *");
  return Operator(Matrix(m_ * o.m_));
}

Operator Operator::operator+(const Operator& o) const {
  require_same_dim(dim_out(), o.dim_out(), "Operator +");
  require_same_dim(dim_in(), o.dim_in(), "Operator +");
  return Operator(Matrix(m_ + o.m_));
}

Operator Operator::operator-(const Operator& o) const {
  require_same_dim(dim_out(), o.dim_out(), "Operator -");
  require_same_dim(dim_in(), o.dim_in(), "Operator -");
  return Operator(Matrix(m_ - o.m_));
}

bool Operator::is_hermitian(double tol) const {
  if (m_.rows() != m_.cols()) return false;
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double Operator::max_abs_diff(const Operator& o) const {
  require_same_dim(dim_out(), o.dim_out(), "max_abs_diff");
  require_same_dim(dim_in(), o.dim_in(), "max_abs_diff");
  return (m_ - o.m_).cwiseAbs().maxCoeff();
}

Operator projector(const StateVector& v) { return outer(v, v); }

Operator outer(const StateVector& a, const StateVector& b) {
  return Operator(Matrix(a.amplitudes() * b.amplitudes().adjoint()));
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(Matrix entries) : m_(std::move(entries)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    throw std::invalid_argument("DensityMatrix: must be square and non-empty");
  }
  const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTolerance) {
    throw std::invalid_argument("DensityMatrix: not Hermitian (deviation " + std::to_string(herm) +
                                ")");
  }
  const Complex tr = m_.trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > kTraceTolerance) {
    throw std::invalid_argument("DensityMatrix: trace " + std::to_string(tr.real()) + " is not 1");
  }
  const double lmin = min_eigenvalue(m_);
  if (lmin < -kPsdTolerance) {
    throw std::invalid_argument("DensityMatrix: smallest eigenvalue " + std::to_string(lmin) +
                                " is negative");
  }
  // Exact Hermitian symmetrization keeps downstream arithmetic real where it should be.
  Matrix sym = 0.5 * (m_ + m_.adjoint());
  m_ = std::move(sym);
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  if (!psi.is_normalized()) throw std::invalid_argument("DensityMatrix::pure: unnormalized state");
  return DensityMatrix(projector(psi).matrix());
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return DensityMatrix(Matrix(Matrix::Identity(d, d) / static_cast<double>(dim)));
}

DensityMatrix DensityMatrix::transformed(const Operator& unitary) const {
  require_same_dim(unitary.dim_in(), dim(), "DensityMatrix::transformed");
  return DensityMatrix(Matrix(unitary.matrix() * m_ * unitary.matrix().adjoint()));
}

// ---------------------------------------------------------------------------
// Labels

Pauli pauli_from_index(int index) {
  if (index < 0 || index > 3) {
    throw std::invalid_argument("PauliLabel index out of range: " + std::to_string(index));
  }
  return static_cast<Pauli>(index);
}

std::string_view to_string(Pauli p) {
  switch (p) {
    case Pauli::identity: return "I";
    case Pauli::x: return "X";
    case Pauli::y: return "Y";
    case Pauli::z: return "Z";
  }
  return "?";
}

std::string_view to_string(BellState b) {
  switch (b) {
    case BellState::phi_plus: return "phi+";
    case BellState::phi_minus: return "phi-";
    case BellState::psi_plus: return "psi+";
    case BellState::psi_minus: return "psi-";
  }
  return "?";
}

BellState bell_state_from_string(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "phi+") return BellState::phi_plus;
  if (s == "phi-") return BellState::phi_minus;
  if (s == "psi+") return BellState::psi_plus;
  if (s == "psi-") return BellState::psi_minus;
  throw std::invalid_argument("unknown Bell state name: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Products and standard objects

Operator tensor(const Operator& a, const Operator& b) {
  const Matrix& A = a.matrix();
  const Matrix& B = b.matrix();
  Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    }
  }
  return Operator(std::move(out));
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  const Vector& u = a.amplitudes();
  const Vector& v = b.amplitudes();
  Vector out(u.size() * v.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out.segment(i * v.size(), v.size()) = u(i) * v;
  return StateVector(std::move(out));
}

Operator pauli(Pauli label) {
  const Complex i(0.0, 1.0);
  Matrix m(2, 2);
  switch (label) {
    case Pauli::identity: m << 1, 0, 0, 1; break;
    case Pauli::x: m << 0, 1, 1, 0; break;
    case Pauli::y: m << 0, -i, i, 0; break;
    case Pauli::z: m << 1, 0, 0, -1; break;
  }
  return Operator(std::move(m));
}

StateVector bell_state(BellState name) {
  const double h = 1.0 / std::sqrt(2.0);
  switch (name) {
    case BellState::phi_plus: return StateVector{h, 0, 0, h};
    case BellState::phi_minus: return StateVector{h, 0, 0, -h};
    case BellState::psi_plus: return StateVector{0, h, h, 0};
    case BellState::psi_minus: return StateVector{0, h, -h, 0};
  }
  throw std::invalid_argument("bell_state: unknown name");
}

StateVector basis_state(std::size_t dim, std::size_t index) {
  if (index >= dim) throw std::invalid_argument("basis_state: index out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(std::move(v));
}

double fidelity(const DensityMatrix& rho, const StateVector& psi) {
  require_same_dim(rho.dim(), psi.dim(), "fidelity");
  if (!psi.is_normalized()) throw std::invalid_argument("fidelity: psi is not normalized");
  const Complex f = psi.amplitudes().dot(rho.matrix() * psi.amplitudes());
  return std::clamp(f.real(), 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
  // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  return rho.matrix().cwiseAbs2().sum();
}

Matrix partial_trace_matrix(const Matrix& m, Subsystem keep) {
  if (m.rows() != 4 || m.cols() != 4) {
    throw std::invalid_argument("partial_trace: expected a 4x4 two-qubit operator");
  }
  Matrix out = Matrix::Zero(2, 2);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int k = 0; k < 2; ++k) {
        if (keep == Subsystem::first) {
          out(a, b) += m(2 * a + k, 2 * b + k);
        } else {
          out(a, b) += m(2 * k + a, 2 * k + b);
        }
      }
    }
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem keep) {
  if (keep != Subsystem::first && keep != Subsystem::second) {
    throw std::invalid_argument("partial_trace: bad subsystem label");
  }
  return DensityMatrix(partial_trace_matrix(rho.matrix(), keep));
}

double min_eigenvalue(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("trace_distance: dimension mismatch");
  }
  Matrix d = a - b;
  d = 0.5 * (d + d.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Matrix swap_qubits(const Matrix& m) {
  if (m.rows() != 4 || m.cols() != 4) throw std::invalid_argument("swap_qubits: expected 4x4");
  static constexpr int kSwap[4] = {0, 2, 1, 3};
  Matrix out(4, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out(kSwap[r], kSwap[c]) = m(r, c);
  }
  return out;
}

DensityMatrix werner(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("werner: weight must lie in [0, 1]");
  const Matrix bell = projector(bell_state(BellState::psi_minus)).matrix();
  return DensityMatrix(Matrix(p * bell + (1.0 - p) * Matrix::Identity(4, 4) / 4.0));
}

}  // namespace ionbell::qmath
