#pragma once

// Dense complex linear algebra for one- and two-qubit states.
//
// Basis ordering is fixed for the whole library: a two-qubit space is
// (photon R/L) x (atom -/+), with R and the negative magnetic sub-level
// first, so the four basis kets are
//
//   0: (R, -)   1: (R, +)   2: (L, -)   3: (L, +)
//
// The left tensor factor is always the most significant index.

#include <complex>
#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

namespace ionbell::qmath {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kPsdTolerance = 1e-9;
inline constexpr double kNormTolerance = 1e-12;

class StateVector {
 public:
  explicit StateVector(Vector amplitudes);
  StateVector(std::initializer_list<Complex> amplitudes);

  /// Throws std::invalid_argument unless the squared norm is 1 within 1e-12.
  static StateVector normalized(Vector amplitudes);

  std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
  const Vector& amplitudes() const { return amps_; }
  Complex operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }

  double norm_squared() const { return amps_.squaredNorm(); }
  bool is_normalized(double tol = kNormTolerance) const;

  /// Returns this vector divided by its norm. Throws on the zero vector.
  StateVector normalize() const;

  StateVector operator*(Complex s) const { return StateVector(Vector(amps_ * s)); }
  StateVector operator+(const StateVector& o) const;
  StateVector operator-(const StateVector& o) const;

 private:
  Vector amps_;
};

/// <a|b>
Complex inner(const StateVector& a, const StateVector& b);

class Operator {
 public:
  explicit Operator(Matrix entries);

  static Operator identity(std::size_t dim);
  static Operator zero(std::size_t dim_out, std::size_t dim_in);

  std::size_t dim_out() const { return static_cast<std::size_t>(m_.rows()); }
  std::size_t dim_in() const { return static_cast<std::size_t>(m_.cols()); }
  const Matrix& matrix() const { return m_; }
  Complex operator()(std::size_t r, std::size_t c) const {
    return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }

  Operator adjoint() const { return Operator(m_.adjoint()); }
  StateVector apply(const StateVector& v) const;

  Operator operator*(const Operator& o) const;
  Operator operator+(const Operator& o) const;
  Operator operator-(const Operator& o) const;
  Operator operator*(Complex s) const { return Operator(Matrix(m_ * s)); }

  bool is_hermitian(double tol = kHermitianTolerance) const;
  /// Max-entry distance to another operator of the same shape.
  double max_abs_diff(const Operator& o) const;

 private:
  Matrix m_;
};

/// |v><v|
Operator projector(const StateVector& v);
/// |a><b|
Operator outer(const StateVector& a, const StateVector& b);

/// Hermitian, unit-trace, positive semidefinite operator. Construction
/// validates all three properties and throws std::invalid_argument on
/// violation.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix entries);

  static DensityMatrix pure(const StateVector& psi);
  static DensityMatrix maximally_mixed(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  Complex operator()(std::size_t r, std::size_t c) const {
    return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }

  /// U rho U^dagger.
  DensityMatrix transformed(const Operator& unitary) const;

 private:
  Matrix m_;
};

enum class Pauli { identity = 0, x = 1, y = 2, z = 3 };
enum class BellState { phi_plus, phi_minus, psi_plus, psi_minus };
enum class Subsystem { first, second };

inline constexpr Pauli kPaulis[] = {Pauli::identity, Pauli::x, Pauli::y, Pauli::z};
inline constexpr BellState kBellStates[] = {BellState::phi_plus, BellState::phi_minus,
                                            BellState::psi_plus, BellState::psi_minus};

Pauli pauli_from_index(int index);
std::string_view to_string(Pauli p);
std::string_view to_string(BellState b);
/// Accepts "phi+", "phi-", "psi+", "psi-" (case-insensitive).
BellState bell_state_from_string(std::string_view name);

Operator tensor(const Operator& a, const Operator& b);
StateVector tensor(const StateVector& a, const StateVector& b);

Operator pauli(Pauli label);
StateVector bell_state(BellState name);
StateVector basis_state(std::size_t dim, std::size_t index);

/// <psi|rho|psi>, clamped to [0, 1].
double fidelity(const DensityMatrix& rho, const StateVector& psi);
/// tr(rho^2)
double purity(const DensityMatrix& rho);
/// Reduced state of the kept subsystem of a two-qubit density matrix.
DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem keep);

/// Same as partial_trace on an arbitrary 4x4 matrix, without validation.
Matrix partial_trace_matrix(const Matrix& m, Subsystem keep);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const Matrix& hermitian);
/// Half the trace norm of (a - b), for Hermitian arguments.
double trace_distance(const Matrix& a, const Matrix& b);

/// Swaps the two qubits of a 4x4 operator.
Matrix swap_qubits(const Matrix& m);

/// p |Psi-><Psi-| + (1 - p) 1/4.
DensityMatrix werner(double p);

}  // namespace ionbell::qmath
