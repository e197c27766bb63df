#pragma once

// Operator-level model of the heralded-absorption interface.
//
// Input space of the Raman operators: (854 nm photon R/L) x (D5/2 m = -5/2, +5/2).
// Output space: (393 nm herald R/L) x (S1/2 m = -1/2, +1/2).
// Both use the library-wide ordering documented in qmath.hpp.

#include <array>
#include <string_view>

#include "ionbell/qmath.hpp"

namespace ionbell::protocol {

using qmath::BellState;
using qmath::Complex;
using qmath::Matrix;
using qmath::Operator;
using qmath::Pauli;
using qmath::StateVector;

enum class Passage { first, second };
enum class Herald { H, V };
enum class AtomicProjection { plus, minus };

inline constexpr Passage kPassages[] = {Passage::first, Passage::second};
inline constexpr Herald kHeralds[] = {Herald::H, Herald::V};
inline constexpr AtomicProjection kAtomicProjections[] = {AtomicProjection::plus,
                                                          AtomicProjection::minus};

std::string_view to_string(Passage p);
std::string_view to_string(Herald h);
std::string_view to_string(AtomicProjection a);

/// One of the eight outcomes of the heralded-absorption Bell measurement.
/// The first passage resolves phi+/phi-, the second psi+/psi-.
class BellOutcome {
 public:
  /// Throws std::invalid_argument if `bell` is not the state selected by the triple.
  BellOutcome(BellState bell, Passage passage, Herald herald, AtomicProjection atomic);

  static BellOutcome from_triple(Passage passage, Herald herald, AtomicProjection atomic);

  BellState bell() const { return bell_; }
  Passage passage() const { return passage_; }
  Herald herald() const { return herald_; }
  AtomicProjection atomic() const { return atomic_; }

 private:
  BellState bell_;
  Passage passage_;
  Herald herald_;
  AtomicProjection atomic_;
};

/// All eight outcomes in (passage, herald, atomic) lexicographic order.
std::array<BellOutcome, 8> all_bell_outcomes();

/// Partial isometry describing Raman scattering in the given passage (4 -> 4, rank 2).
Operator raman_operator(Passage passage);

/// |H>_393 = (|R> + |L>)/sqrt2,  |V>_393 = (|R> - |L>)/(i sqrt2).
StateVector herald_state(Herald h);
/// |+>_S = (|-1/2> + |+1/2>)/sqrt2,  |->_S = (|-1/2> - |+1/2>)/(i sqrt2).
StateVector ground_state(AtomicProjection a);

Operator herald_projector(Herald h);
Operator ground_projector(AtomicProjection a);

/// Row vector (<h| <a|) R_p, returned as the ket whose adjoint it is.
StateVector bell_projection_bra(Passage passage, Herald herald, AtomicProjection atomic);

/// The coefficient c in (<h| <a|) R_p = c <Bell|, computed from the operators.
Complex bell_projection_coefficient(const BellOutcome& outcome);

/// R_p^dagger (P_h x P_a) R_p = 1/2 |Bell><Bell|.
Operator bell_povm_element(const BellOutcome& outcome);

/// 2x2 Kraus operator taking the incoming photon (R/L) to the S qubit for a
/// fixed passage and herald, with the D superposition (|-5/2> + e^{i phase}|+5/2>)/sqrt2.
/// Summing K^dagger K over both heralds gives 1/2 per passage, and the
/// identity over both passages.
Operator mapping_kraus(Passage passage, Herald herald, double d_phase = 0.0);

/// Atomic ground-state qubit after mapping a normalized photon a|R> + b|L>,
/// conditioned on absorption in `passage`. Unnormalized; squared norm is 1/2
/// (the probability of this herald given the passage).
StateVector map_photon_to_atom(const StateVector& photon, Passage passage, Herald herald);

/// Unnormalized (partner photon B) x (S qubit) state after photon A of rho_ab
/// is absorbed with the given passage, herald and D phase. rho_ab is ordered (A, B).
Matrix transfer_entanglement(const Matrix& rho_ab, Passage passage, Herald herald,
                             double d_phase);

/// Unnormalized state of photon B after the Bell measurement `outcome` on
/// (photon A, D qubit). rho_ab ordered (A, B); rho_d is the 2x2 D-qubit state.
/// Its trace is the outcome probability.
Matrix teleport_partner_state(const BellOutcome& outcome, const Matrix& rho_ab,
                              const Matrix& rho_d);
/// Same, with the (A, D) POVM element supplied directly.
Matrix teleport_partner_state(const Matrix& povm_element, const Matrix& rho_ab,
                              const Matrix& rho_d);

struct TeleportBranch {
  BellState bell;
  StateVector partner_state;  // normalized, carries the branch sign
  Complex amplitude;          // 1/2
};

/// Decomposition of |Psi->_AB x (alpha|-5/2> + beta|+5/2>) over the (A, D) Bell basis.
std::array<TeleportBranch, 4> teleport_decompose(const StateVector& input);

/// Pauli operator that undoes the teleportation branch on photon B.
Pauli pauli_correction(BellState bell);

// ---------------------------------------------------------------------------
// Partner-photon polarization analysis

enum class PolarizationBasis { HV, DA, RL };
inline constexpr PolarizationBasis kPolarizationBases[] = {PolarizationBasis::HV,
                                                           PolarizationBasis::DA,
                                                           PolarizationBasis::RL};

std::string_view to_string(PolarizationBasis b);
PolarizationBasis polarization_basis_from_string(std::string_view s);

/// Detector 0 is H, D, R; detector 1 is V, A, L. V follows the |V>_393 phase convention.
StateVector polarization_state(PolarizationBasis basis, int detector);
/// Pauli observable measured by a basis: HV -> X, DA -> Y, RL -> Z.
Pauli basis_observable(PolarizationBasis basis);
/// +1 for detector 0, -1 for detector 1.
inline int detector_eigenvalue(int detector) { return detector == 0 ? 1 : -1; }

// ---------------------------------------------------------------------------
// Larmor precession and spin echo

struct LarmorConfig {
  double freq_d_hz = 24e6;
  double freq_s_hz = 8e6;
  double b_field_gauss = 2.855;
  double loop_period_s = 500e-9;

  /// Throws std::invalid_argument on non-positive frequencies or loop period.
  void validate() const;
};

enum class Qubit { D, S };

/// 2 pi f t mod 2 pi for the chosen qubit.
double larmor_phase(double t_s, const LarmorConfig& config, Qubit qubit);

/// Phase of the D superposition at absorption time in the frame of the
/// reference oscillator, which runs at the S Larmor frequency: 2 pi (f_D - f_S) t mod 2 pi.
double frame_phase(double t_s, const LarmorConfig& config);

class SpinEchoSchedule {
 public:
  double tau_d_s() const { return tau_d_; }
  double tau_s_s() const { return tau_s_; }

 private:
  friend SpinEchoSchedule spin_echo_schedule(double tau_d_s, const LarmorConfig& config);
  SpinEchoSchedule(double tau_d, double tau_s) : tau_d_(tau_d), tau_s_(tau_s) {}
  double tau_d_;
  double tau_s_;
};

/// tau_S = 3 tau_D. Throws if tau_D is not a positive integer multiple of the
/// loop period, or if f_D / f_S != 3.
SpinEchoSchedule spin_echo_schedule(double tau_d_s, const LarmorConfig& config);

/// Net phase error after the echo: the D-stage error accumulated at detuning
/// `detuning_d_hz` over tau_D is inverted by the pi pulse, then the S stage
/// accumulates 2 pi detuning_s_hz tau_S.
double echo_residual_phase(const SpinEchoSchedule& schedule, double detuning_d_hz,
                           double detuning_s_hz);

/// Residual for a constant field offset that shifts the S frequency by
/// `detuning_s_hz` and the D frequency proportionally (f_D / f_S times larger).
double echo_residual_phase(const SpinEchoSchedule& schedule, const LarmorConfig& config,
                           double detuning_s_hz);

}  // namespace ionbell::protocol
