#include "ionbell/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ionbell::protocol {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const Complex kI(0.0, 1.0);

// Index in a two-qubit space under the global ordering.
constexpr int idx(int first, int second) { return 2 * first + second; }

constexpr int kR = 0;
constexpr int kL = 1;
constexpr int kMinus = 0;  // m = -5/2 (D) or -1/2 (S)
constexpr int kPlus = 1;   // m = +5/2 (D) or +1/2 (S)

BellState bell_for(Passage passage, Herald herald, AtomicProjection atomic) {
  // (H,+) and (V,-) select the symmetric state, (H,-) and (V,+) the antisymmetric one.
  const bool plus = (herald == Herald::H) == (atomic == AtomicProjection::plus);
  if (passage == Passage::first) return plus ? BellState::phi_plus : BellState::phi_minus;
  return plus ? BellState::psi_plus : BellState::psi_minus;
}

double wrap_cycles(double cycles) {
  double frac = cycles - std::floor(cycles);
  if (1.0 - frac < 1e-12) frac = 0.0;
  return frac * kTwoPi;
}

}  // namespace

std::string_view to_string(Passage p) { return p == Passage::first ? "first" : "second"; }
std::string_view to_string(Herald h) { return h == Herald::H ? "H" : "V"; }
std::string_view to_string(AtomicProjection a) {
  return a == AtomicProjection::plus ? "+" : "-";
}

// ---------------------------------------------------------------------------
// BellOutcome

BellOutcome::BellOutcome(BellState bell, Passage passage, Herald herald, AtomicProjection atomic)
    : bell_(bell), passage_(passage), herald_(herald), atomic_(atomic) {
  if (bell_for(passage, herald, atomic) != bell) {
    throw std::invalid_argument("BellOutcome: (" + std::string(to_string(passage)) + ", " +
                                std::string(to_string(herald)) + ", " +
                                std::string(to_string(atomic)) + ") does not select " +
                                std::string(qmath::to_string(bell)));
  }
}

BellOutcome BellOutcome::from_triple(Passage passage, Herald herald, AtomicProjection atomic) {
  return BellOutcome(bell_for(passage, herald, atomic), passage, herald, atomic);
}

std::array<BellOutcome, 8> all_bell_outcomes() {
  std::array<BellOutcome, 8> out{
      BellOutcome::from_triple(Passage::first, Herald::H, AtomicProjection::plus),
      BellOutcome::from_triple(Passage::first, Herald::H, AtomicProjection::minus),
      BellOutcome::from_triple(Passage::first, Herald::V, AtomicProjection::plus),
      BellOutcome::from_triple(Passage::first, Herald::V, AtomicProjection::minus),
      BellOutcome::from_triple(Passage::second, Herald::H, AtomicProjection::plus),
      BellOutcome::from_triple(Passage::second, Herald::H, AtomicProjection::minus),
      BellOutcome::from_triple(Passage::second, Herald::V, AtomicProjection::plus),
      BellOutcome::from_triple(Passage::second, Herald::V, AtomicProjection::minus),
  };
  return out;
}

// ---------------------------------------------------------------------------
// Operators

Operator raman_operator(Passage passage) {
  Matrix m = Matrix::Zero(4, 4);
  if (passage == Passage::first) {
    m(idx(kL, kMinus), idx(kR, kMinus)) = 1.0;  // |L>_b|-1/2> <R|<-5/2|
    m(idx(kR, kPlus), idx(kL, kPlus)) = 1.0;    // |R>_b|+1/2> <L|<+5/2|
  } else {
    m(idx(kL, kMinus), idx(kL, kMinus)) = 1.0;  // |L>_b|-1/2> <L|<-5/2|
    m(idx(kR, kPlus), idx(kR, kPlus)) = 1.0;    // |R>_b|+1/2> <R|<+5/2|
  }
  return Operator(std::move(m));
}

StateVector herald_state(Herald h) {
  const double s = 1.0 / std::sqrt(2.0);
  if (h == Herald::H) return StateVector{s, s};
  return StateVector{Complex(s) / kI, Complex(-s) / kI};
}

StateVector ground_state(AtomicProjection a) {
  const double s = 1.0 / std::sqrt(2.0);
  if (a == AtomicProjection::plus) return StateVector{s, s};
  return StateVector{Complex(s) / kI, Complex(-s) / kI};
}

Operator herald_projector(Herald h) { return qmath::projector(herald_state(h)); }
Operator ground_projector(AtomicProjection a) { return qmath::projector(ground_state(a)); }

StateVector bell_projection_bra(Passage passage, Herald herald, AtomicProjection atomic) {
  const StateVector ket = qmath::tensor(herald_state(herald), ground_state(atomic));
  return raman_operator(passage).adjoint().apply(ket);
}

Complex bell_projection_coefficient(const BellOutcome& outcome) {
  const StateVector bra =
      bell_projection_bra(outcome.passage(), outcome.herald(), outcome.atomic());
  return qmath::inner(bra, qmath::bell_state(outcome.bell()));
}

Operator bell_povm_element(const BellOutcome& outcome) {
  const Operator r = raman_operator(outcome.passage());
  const Operator p = qmath::tensor(herald_projector(outcome.herald()),
                                   ground_projector(outcome.atomic()));
  return r.adjoint() * p * r;
}

Operator mapping_kraus(Passage passage, Herald herald, double d_phase) {
  const Operator r = raman_operator(passage);
  const double s = 1.0 / std::sqrt(2.0);
  const StateVector d_state{s, s * std::exp(kI * d_phase)};
  const StateVector h = herald_state(herald);
  Matrix k(2, 2);
  for (int photon = 0; photon < 2; ++photon) {
    const StateVector out = r.apply(qmath::tensor(qmath::basis_state(2, photon), d_state));
    for (int s_level = 0; s_level < 2; ++s_level) {
      Complex amp = 0.0;
      for (int blue = 0; blue < 2; ++blue) amp += std::conj(h[blue]) * out[idx(blue, s_level)];
      k(s_level, photon) = amp;
    }
  }
  return Operator(std::move(k));
}

StateVector map_photon_to_atom(const StateVector& photon, Passage passage, Herald herald) {
  if (photon.dim() != 2) throw std::invalid_argument("map_photon_to_atom: photon must be a qubit");
  if (!photon.is_normalized()) {
    throw std::invalid_argument("map_photon_to_atom: photon state is not normalized");
  }
  return mapping_kraus(passage, herald).apply(photon) * std::sqrt(2.0);
}

Matrix transfer_entanglement(const Matrix& rho_ab, Passage passage, Herald herald,
                             double d_phase) {
  if (rho_ab.rows() != 4 || rho_ab.cols() != 4) {
    throw std::invalid_argument("transfer_entanglement: expected a 4x4 photon-pair state");
  }
  const Operator k = mapping_kraus(passage, herald, d_phase);
  const Matrix kk = qmath::tensor(k, Operator::identity(2)).matrix();
  // (S, B) -> (B, S)
  return qmath::swap_qubits(kk * rho_ab * kk.adjoint());
}

Matrix teleport_partner_state(const BellOutcome& outcome, const Matrix& rho_ab,
                              const Matrix& rho_d) {
  return teleport_partner_state(bell_povm_element(outcome).matrix(), rho_ab, rho_d);
}

Matrix teleport_partner_state(const Matrix& e, const Matrix& rho_ab, const Matrix& rho_d) {
  if (rho_ab.rows() != 4 || rho_ab.cols() != 4 || rho_d.rows() != 2 || rho_d.cols() != 2 ||
      e.rows() != 4 || e.cols() != 4) {
    throw std::invalid_argument("teleport_partner_state: expected 4x4 pair and 2x2 D state");
  }
  Matrix out = Matrix::Zero(2, 2);
  // rho_B[b,b'] = sum_{x,y} E[x,y] rho[(y,b),(x,b')], x and y ranging over (A, D).
  for (int b = 0; b < 2; ++b) {
    for (int b2 = 0; b2 < 2; ++b2) {
      Complex acc = 0.0;
      for (int a = 0; a < 2; ++a) {
        for (int d = 0; d < 2; ++d) {
          for (int a2 = 0; a2 < 2; ++a2) {
            for (int d2 = 0; d2 < 2; ++d2) {
              acc += e(idx(a2, d2), idx(a, d)) * rho_ab(idx(a, b), idx(a2, b2)) * rho_d(d, d2);
            }
          }
        }
      }
      out(b, b2) = acc;
    }
  }
  return out;
}

std::array<TeleportBranch, 4> teleport_decompose(const StateVector& input) {
  if (input.dim() != 2) throw std::invalid_argument("teleport_decompose: input must be a qubit");
  if (!input.is_normalized()) {
    throw std::invalid_argument("teleport_decompose: input state is not normalized");
  }
  const StateVector resource = qmath::bell_state(BellState::psi_minus);  // (A, B)
  const auto branch = [&](BellState b) {
    const StateVector bell = qmath::bell_state(b);  // (A, D)
    qmath::Vector partner = qmath::Vector::Zero(2);
    for (int k = 0; k < 2; ++k) {
      for (int a = 0; a < 2; ++a) {
        for (int d = 0; d < 2; ++d) {
          partner(k) += std::conj(bell[idx(a, d)]) * resource[idx(a, k)] * input[d];
        }
      }
    }
    return TeleportBranch{b, StateVector(qmath::Vector(2.0 * partner)), Complex(0.5)};
  };
  return {branch(BellState::psi_plus), branch(BellState::psi_minus), branch(BellState::phi_plus),
          branch(BellState::phi_minus)};
}

Pauli pauli_correction(BellState bell) {
  switch (bell) {
    case BellState::phi_minus: return Pauli::x;
    case BellState::phi_plus: return Pauli::y;
    case BellState::psi_minus: return Pauli::identity;
    case BellState::psi_plus: return Pauli::z;
  }
  throw std::invalid_argument("pauli_correction: unknown Bell state");
}

// ---------------------------------------------------------------------------
// Polarization analysis

std::string_view to_string(PolarizationBasis b) {
  switch (b) {
    case PolarizationBasis::HV: return "HV";
    case PolarizationBasis::DA: return "DA";
    case PolarizationBasis::RL: return "RL";
  }
  return "?";
}

PolarizationBasis polarization_basis_from_string(std::string_view s) {
  if (s == "HV") return PolarizationBasis::HV;
  if (s == "DA") return PolarizationBasis::DA;
  if (s == "RL") return PolarizationBasis::RL;
  throw std::invalid_argument("unknown polarization basis: " + std::string(s));
}

StateVector polarization_state(PolarizationBasis basis, int detector) {
  if (detector != 0 && detector != 1) throw std::invalid_argument("detector must be 0 or 1");
  const double s = 1.0 / std::sqrt(2.0);
  switch (basis) {
    case PolarizationBasis::HV:
      return detector == 0 ? StateVector{s, s} : StateVector{Complex(s) / kI, Complex(-s) / kI};
    case PolarizationBasis::DA:
      return detector == 0 ? StateVector{s, kI * s} : StateVector{s, -kI * s};
    case PolarizationBasis::RL:
      return detector == 0 ? StateVector{1.0, 0.0} : StateVector{0.0, 1.0};
  }
  throw std::invalid_argument("unknown polarization basis");
}

Pauli basis_observable(PolarizationBasis basis) {
  switch (basis) {
    case PolarizationBasis::HV: return Pauli::x;
    case PolarizationBasis::DA: return Pauli::y;
    case PolarizationBasis::RL: return Pauli::z;
  }
  throw std::invalid_argument("unknown polarization basis");
}

// ---------------------------------------------------------------------------
// Larmor precession and spin echo

void LarmorConfig::validate() const {
  if (!(freq_d_hz > 0.0) || !(freq_s_hz > 0.0)) {
    throw std::invalid_argument("LarmorConfig: Larmor frequencies must be positive");
  }
  if (!(loop_period_s > 0.0)) throw std::invalid_argument("LarmorConfig: loop period must be > 0");
}

double larmor_phase(double t_s, const LarmorConfig& config, Qubit qubit) {
  if (!(t_s >= 0.0)) throw std::invalid_argument("larmor_phase: time must be non-negative");
  const double f = qubit == Qubit::D ? config.freq_d_hz : config.freq_s_hz;
  return wrap_cycles(f * t_s);
}

double frame_phase(double t_s, const LarmorConfig& config) {
  if (!(t_s >= 0.0)) throw std::invalid_argument("frame_phase: time must be non-negative");
  return wrap_cycles((config.freq_d_hz - config.freq_s_hz) * t_s);
}

SpinEchoSchedule spin_echo_schedule(double tau_d_s, const LarmorConfig& config) {
  config.validate();
  if (std::abs(config.freq_d_hz / config.freq_s_hz - 3.0) > 1e-9) {
    throw std::invalid_argument("spin_echo_schedule: requires f_D / f_S = 3");
  }
  if (!(tau_d_s > 0.0)) throw std::invalid_argument("spin_echo_schedule: tau_D must be positive");
  const double loops = tau_d_s / config.loop_period_s;
  const double whole = std::round(loops);
  if (whole < 1.0 || std::abs(loops - whole) > 1e-6) {
    throw std::invalid_argument("spin_echo_schedule: tau_D = " + std::to_string(tau_d_s) +
                                " s is not an integer multiple of the loop period");
  }
  const double tau_d = whole * config.loop_period_s;
  return SpinEchoSchedule(tau_d, 3.0 * tau_d);
}

double echo_residual_phase(const SpinEchoSchedule& schedule, double detuning_d_hz,
                           double detuning_s_hz) {
  const double d_stage = kTwoPi * detuning_d_hz * schedule.tau_d_s();
  const double s_stage = kTwoPi * detuning_s_hz * schedule.tau_s_s();
  return -d_stage + s_stage;
}

double echo_residual_phase(const SpinEchoSchedule& schedule, const LarmorConfig& config,
                           double detuning_s_hz) {
  const double ratio = config.freq_d_hz / config.freq_s_hz;
  return echo_residual_phase(schedule, ratio * detuning_s_hz, detuning_s_hz);
}

}  // namespace ionbell::protocol
