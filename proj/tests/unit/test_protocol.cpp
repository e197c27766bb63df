#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "ionbell/protocol.hpp"

namespace {

using namespace ionbell;
using protocol::AtomicProjection;
using protocol::Herald;
using protocol::Passage;
using qmath::BellState;
using qmath::Complex;
using qmath::Matrix;
using qmath::Pauli;
using qmath::StateVector;
using qmath::Vector;
using test_support::Gen;

const double kS = 1.0 / std::sqrt(2.0);
const Complex kI{0.0, 1.0};

// Index of (photon/herald R|L, level -|+) in the fixed ordering.
int ix(int rl, int pm) { return 2 * rl + pm; }

Matrix raman_literal(Passage p) {
  Matrix m = Matrix::Zero(4, 4);
  if (p == Passage::first) {
    m(ix(1, 0), ix(0, 0)) = 1.0;  // R,-5/2 -> L,-1/2
    m(ix(0, 1), ix(1, 1)) = 1.0;  // L,+5/2 -> R,+1/2
  } else {
    m(ix(1, 0), ix(1, 0)) = 1.0;  // L,-5/2 -> L,-1/2
    m(ix(0, 1), ix(0, 1)) = 1.0;  // R,+5/2 -> R,+1/2
  }
  return m;
}

Vector herald_literal(Herald h) {
  Vector v(2);
  if (h == Herald::H) {
    v << kS, kS;
  } else {
    v << kS / kI, -kS / kI;
  }
  return v;
}

Vector ground_literal(AtomicProjection a) {
  Vector v(2);
  if (a == AtomicProjection::plus) {
    v << kS, kS;
  } else {
    v << kS / kI, -kS / kI;
  }
  return v;
}

Vector bell_literal(BellState b) {
  Vector v = Vector::Zero(4);
  switch (b) {
    case BellState::phi_plus: v(0) = kS; v(3) = kS; break;
    case BellState::phi_minus: v(0) = kS; v(3) = -kS; break;
    case BellState::psi_plus: v(1) = kS; v(2) = kS; break;
    case BellState::psi_minus: v(1) = kS; v(2) = -kS; break;
  }
  return v;
}

struct Identity {
  Passage passage;
  Herald herald;
  AtomicProjection atomic;
  BellState bell;
  Complex printed;  // coefficient c in (<h|<a|) R = c <Bell| as published
};

const Identity kIdentities[] = {
    {Passage::first, Herald::H, AtomicProjection::plus, BellState::phi_plus, kS},
    {Passage::first, Herald::V, AtomicProjection::minus, BellState::phi_plus, kS},
    {Passage::first, Herald::H, AtomicProjection::minus, BellState::phi_minus, kI * kS},
    {Passage::first, Herald::V, AtomicProjection::plus, BellState::phi_minus, -kI * kS},
    {Passage::second, Herald::H, AtomicProjection::plus, BellState::psi_plus, kS},
    {Passage::second, Herald::V, AtomicProjection::minus, BellState::psi_plus, kS},
    {Passage::second, Herald::H, AtomicProjection::minus, BellState::psi_minus, kI * kS},
    {Passage::second, Herald::V, AtomicProjection::plus, BellState::psi_minus, -kI * kS},
};

// Row vector (<h| <a|) R computed from the literal ingredients.
Eigen::RowVectorXcd projected_row(const Identity& id) {
  const Vector h = herald_literal(id.herald);
  const Vector a = ground_literal(id.atomic);
  Vector out(4);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) out(2 * i + j) = h(i) * a(j);
  }
  return out.adjoint() * raman_literal(id.passage);
}

TEST(Protocol, RamanOperatorsMatchTransitionTable) {
  for (Passage p : protocol::kPassages) {
    EXPECT_LT(test_support::max_abs(protocol::raman_operator(p).matrix() - raman_literal(p)), 1e-15);
  }
  const StateVector r_minus = qmath::basis_state(4, ix(0, 0));
  const StateVector out = protocol::raman_operator(Passage::first).apply(r_minus);
  EXPECT_NEAR(std::abs(out[ix(1, 0)]), 1.0, 1e-15);
  const StateVector l_minus = qmath::basis_state(4, ix(1, 0));
  EXPECT_LT(protocol::raman_operator(Passage::first).apply(l_minus).amplitudes().norm(), 1e-15);
}

TEST(Protocol, PassagesPartitionTheInputSpace) {
  const Matrix r1 = protocol::raman_operator(Passage::first).matrix();
  const Matrix r2 = protocol::raman_operator(Passage::second).matrix();
  const Matrix p1 = r1.adjoint() * r1;
  const Matrix p2 = r2.adjoint() * r2;
  EXPECT_LT(test_support::max_abs(p1 + p2 - Matrix::Identity(4, 4)), 1e-12);
  EXPECT_LT(test_support::max_abs(p1 * p1 - p1), 1e-12);
  EXPECT_LT(test_support::max_abs(p1 - p1.adjoint()), 1e-12);
  EXPECT_LT(test_support::max_abs(p1 * p2), 1e-12);
  EXPECT_NEAR(p1.trace().real(), 2.0, 1e-12);
  EXPECT_NEAR(p2.trace().real(), 2.0, 1e-12);
}

TEST(Protocol, HeraldAndGroundStatesFollowStatedConvention) {
  for (Herald h : protocol::kHeralds) {
    EXPECT_LT((protocol::herald_state(h).amplitudes() - herald_literal(h)).norm(), 1e-15);
  }
  for (AtomicProjection a : protocol::kAtomicProjections) {
    EXPECT_LT((protocol::ground_state(a).amplitudes() - ground_literal(a)).norm(), 1e-15);
  }
  const Matrix sum = protocol::herald_projector(Herald::H).matrix() + protocol::herald_projector(Herald::V).matrix();
  EXPECT_LT(test_support::max_abs(sum - Matrix::Identity(2, 2)), 1e-15);
  // <H|L> = 1/sqrt2
  EXPECT_NEAR(std::abs(protocol::herald_state(Herald::H)[1] - kS), 0.0, 1e-15);
  // |<-|-1/2>|^2 = 1/2
  const StateVector projected = protocol::ground_projector(AtomicProjection::minus).apply(qmath::basis_state(2, 0));
  EXPECT_NEAR(projected.norm_squared(), 0.5, 1e-15);
  for (Herald h : protocol::kHeralds) {
    const Matrix p = protocol::herald_projector(h).matrix();
    EXPECT_LT(test_support::max_abs(p * p - p), 1e-15);
  }
}

TEST(Protocol, EightProjectionIdentitiesHoldEntrywise) {
  for (const Identity& id : kIdentities) {
    const Eigen::RowVectorXcd row = projected_row(id);
    const Vector bell = bell_literal(id.bell);
    const Complex c = (row * bell).value();
    EXPECT_NEAR(std::abs(c), kS, 1e-12);
    const Eigen::RowVectorXcd expected = c * bell.adjoint();
    EXPECT_LT((row - expected).cwiseAbs().maxCoeff(), 1e-12);
    // The library computes the same row and the same coefficient.
    const StateVector lib = protocol::bell_projection_bra(id.passage, id.herald, id.atomic);
    EXPECT_LT((lib.amplitudes().adjoint() - row).cwiseAbs().maxCoeff(), 1e-12);
    const protocol::BellOutcome o(id.bell, id.passage, id.herald, id.atomic);
    EXPECT_LT(std::abs(protocol::bell_projection_coefficient(o) - c), 1e-12);
  }
}

TEST(Protocol, PublishedPhasesHoldExceptForThePsiMinusPair) {
  for (const Identity& id : kIdentities) {
    const Complex c = (projected_row(id) * bell_literal(id.bell)).value();
    if (id.bell == BellState::psi_minus) {
      EXPECT_LT(std::abs(c + id.printed), 1e-12) << "global sign opposite to the printed coefficient";
    } else {
      EXPECT_LT(std::abs(c - id.printed), 1e-12);
    }
  }
}

TEST(Protocol, BellOutcomeTriplesAreConsistent) {
  for (const Identity& id : kIdentities) {
    EXPECT_EQ(protocol::BellOutcome::from_triple(id.passage, id.herald, id.atomic).bell(), id.bell);
    const BellState wrong = id.bell == BellState::phi_plus ? BellState::psi_plus : BellState::phi_plus;
    EXPECT_THROW(protocol::BellOutcome(wrong, id.passage, id.herald, id.atomic), std::invalid_argument);
  }
  int first = 0;
  for (const auto& o : protocol::all_bell_outcomes()) {
    if (o.passage() == Passage::first) {
      ++first;
      EXPECT_TRUE(o.bell() == BellState::phi_plus || o.bell() == BellState::phi_minus);
    } else {
      EXPECT_TRUE(o.bell() == BellState::psi_plus || o.bell() == BellState::psi_minus);
    }
  }
  EXPECT_EQ(first, 4);
}

TEST(Protocol, PovmElementsAreHalfBellProjectorsAndComplete) {
  Matrix sum = Matrix::Zero(4, 4);
  for (const auto& o : protocol::all_bell_outcomes()) {
    const Matrix e = protocol::bell_povm_element(o).matrix();
    const Vector b = bell_literal(o.bell());
    EXPECT_LT(test_support::max_abs(e - 0.5 * b * b.adjoint()), 1e-12);
    sum += e;
  }
  EXPECT_LT(test_support::max_abs(sum - Matrix::Identity(4, 4)), 1e-12);
}

TEST(Protocol, MappingExamples) {
  const StateVector r{1.0, 0.0};
  const StateVector a = protocol::map_photon_to_atom(r, Passage::first, Herald::H);
  EXPECT_NEAR(qmath::fidelity(qmath::DensityMatrix::pure(qmath::basis_state(2, 0)), a.normalize()), 1.0, 1e-12);
  EXPECT_NEAR(a.norm_squared(), 0.5, 1e-12);
  const StateVector b = protocol::map_photon_to_atom(r, Passage::second, Herald::H);
  EXPECT_NEAR(qmath::fidelity(qmath::DensityMatrix::pure(qmath::basis_state(2, 1)), b.normalize()), 1.0, 1e-12);
  const StateVector d{kS, kS};
  const StateVector c = protocol::map_photon_to_atom(d, Passage::first, Herald::V);
  const StateVector expected{0.5, -0.5};
  EXPECT_NEAR(std::abs(qmath::inner(expected, c)), 0.5, 1e-12);
  EXPECT_NEAR(c.norm_squared(), 0.5, 1e-12);
  EXPECT_THROW(protocol::map_photon_to_atom(StateVector{1.0, 1.0}, Passage::first, Herald::H), std::invalid_argument);
}

TEST(ProtocolProperty, MappingMatchesClosedForm) {
  Gen g(21);
  for (int trial = 0; trial < 100; ++trial) {
    const StateVector ph = g.state(2);
    const Complex a = ph[0];
    const Complex b = ph[1];
    for (Passage p : protocol::kPassages) {
      for (Herald h : protocol::kHeralds) {
        const double sign = h == Herald::H ? 1.0 : -1.0;
        Vector expected(2);
        if (p == Passage::first) {
          expected << a * kS, sign * b * kS;
        } else {
          expected << b * kS, sign * a * kS;
        }
        const StateVector got = protocol::map_photon_to_atom(ph, p, h);
        EXPECT_NEAR(got.norm_squared(), 0.5, 1e-12);
        EXPECT_NEAR(std::abs(got.amplitudes().dot(expected)), 0.5, 1e-12);
      }
    }
  }
}

TEST(Protocol, MappingKrausCompletenessPerPassage) {
  for (double phase : {0.0, 0.7, 2.9}) {
    Matrix total = Matrix::Zero(2, 2);
    for (Passage p : protocol::kPassages) {
      Matrix per = Matrix::Zero(2, 2);
      for (Herald h : protocol::kHeralds) {
        const Matrix k = protocol::mapping_kraus(p, h, phase).matrix();
        per += k.adjoint() * k;
      }
      EXPECT_LT(test_support::max_abs(per - 0.5 * Matrix::Identity(2, 2)), 1e-12);
      total += per;
    }
    EXPECT_LT(test_support::max_abs(total - Matrix::Identity(2, 2)), 1e-12);
  }
}

TEST(Protocol, TeleportDecompositionExamples) {
  const auto branches = protocol::teleport_decompose(StateVector{1.0, 0.0});
  double total = 0.0;
  for (const auto& br : branches) {
    EXPECT_NEAR(std::abs(br.amplitude), 0.5, 1e-15);
    total += std::norm(br.amplitude);
    if (br.bell == BellState::psi_minus) {
      EXPECT_NEAR(std::abs(br.partner_state[0]), 1.0, 1e-12);
    }
    if (br.bell == BellState::phi_plus) {
      EXPECT_NEAR(std::abs(br.partner_state[1]), 1.0, 1e-12);
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

Vector branch_literal(BellState b, Complex alpha, Complex beta) {
  Vector v(2);
  switch (b) {
    case BellState::psi_plus: v << alpha, -beta; break;
    case BellState::psi_minus: v << -alpha, -beta; break;
    case BellState::phi_plus: v << beta, -alpha; break;
    case BellState::phi_minus: v << -beta, -alpha; break;
  }
  return v;
}

TEST(ProtocolProperty, TeleportBranchesMatchRegroupingUpToGlobalPhase) {
  Gen g(22);
  for (int trial = 0; trial < 100; ++trial) {
    const StateVector in = g.state(2);
    for (const auto& br : protocol::teleport_decompose(in)) {
      const Vector lit = branch_literal(br.bell, in[0], in[1]);
      EXPECT_NEAR(std::abs(br.partner_state.amplitudes().dot(lit)), 1.0, 1e-12);
    }
  }
}

TEST(ProtocolProperty, CorrectedBranchesRecoverInput) {
  Gen g(23);
  for (int trial = 0; trial < 100; ++trial) {
    const StateVector in = g.state(2);
    for (const auto& br : protocol::teleport_decompose(in)) {
      const StateVector corrected = qmath::pauli(protocol::pauli_correction(br.bell)).apply(br.partner_state);
      EXPECT_NEAR(qmath::fidelity(qmath::DensityMatrix::pure(in), corrected), 1.0, 1e-10);
    }
  }
}

TEST(Protocol, PauliCorrectionTable) {
  EXPECT_EQ(protocol::pauli_correction(BellState::phi_minus), Pauli::x);
  EXPECT_EQ(protocol::pauli_correction(BellState::phi_plus), Pauli::y);
  EXPECT_EQ(protocol::pauli_correction(BellState::psi_minus), Pauli::identity);
  EXPECT_EQ(protocol::pauli_correction(BellState::psi_plus), Pauli::z);
}

TEST(ProtocolProperty, PartnerStateFromPovmIsCorrectableBranch) {
  Gen g(24);
  const Matrix resource = qmath::projector(qmath::bell_state(BellState::psi_minus)).matrix();
  for (int trial = 0; trial < 30; ++trial) {
    const StateVector in = g.state(2);
    const Matrix rho_d = in.amplitudes() * in.amplitudes().adjoint();
    double total = 0.0;
    for (const auto& o : protocol::all_bell_outcomes()) {
      const Matrix m = protocol::teleport_partner_state(o, resource, rho_d);
      const double p = m.trace().real();
      EXPECT_NEAR(p, 0.125, 1e-12);
      total += p;
      const Matrix u = qmath::pauli(protocol::pauli_correction(o.bell())).matrix();
      const Matrix out = u * m * u.adjoint() / p;
      EXPECT_NEAR((in.amplitudes().adjoint() * out * in.amplitudes())(0, 0).real(), 1.0, 1e-10);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Protocol, PolarizationBasesMeasureExpectedPaulis) {
  for (auto b : protocol::kPolarizationBases) {
    const Matrix obs = qmath::pauli(protocol::basis_observable(b)).matrix();
    for (int d = 0; d < 2; ++d) {
      const StateVector s = protocol::polarization_state(b, d);
      const double ev = (s.amplitudes().adjoint() * obs * s.amplitudes())(0, 0).real();
      EXPECT_NEAR(ev, protocol::detector_eigenvalue(d), 1e-12);
    }
    EXPECT_EQ(protocol::polarization_basis_from_string(protocol::to_string(b)), b);
  }
}

TEST(Protocol, LarmorPhaseExamples) {
  const protocol::LarmorConfig cfg;
  EXPECT_NEAR(protocol::larmor_phase(0.0, cfg, protocol::Qubit::D), 0.0, 1e-15);
  const double full = protocol::larmor_phase(1.0 / cfg.freq_d_hz, cfg, protocol::Qubit::D);
  EXPECT_LT(std::min(full, 2.0 * std::numbers::pi - full), 1e-9);
  EXPECT_NEAR(protocol::larmor_phase(31.25e-9, cfg, protocol::Qubit::S), std::numbers::pi / 2.0, 1e-12);
  EXPECT_NEAR(protocol::frame_phase(31.25e-9, cfg), std::numbers::pi, 1e-12);
  EXPECT_THROW(protocol::larmor_phase(-1e-9, cfg, protocol::Qubit::S), std::invalid_argument);
}

TEST(Protocol, SpinEchoSchedule) {
  const protocol::LarmorConfig cfg;
  const auto s = protocol::spin_echo_schedule(500e-9, cfg);
  EXPECT_NEAR(s.tau_s_s(), 1500e-9, 1e-18);
  EXPECT_THROW(protocol::spin_echo_schedule(750e-9, cfg), std::invalid_argument);
  EXPECT_THROW(protocol::spin_echo_schedule(0.0, cfg), std::invalid_argument);
  EXPECT_NEAR(protocol::echo_residual_phase(s, 0.0, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(protocol::echo_residual_phase(s, cfg, 1e3), 0.0, 1e-12);
  const double d_only = protocol::echo_residual_phase(s, 2e3, 0.0);
  EXPECT_NEAR(d_only, -2.0 * std::numbers::pi * 2e3 * 500e-9, 1e-12);
}

TEST(ProtocolProperty, EchoCancelsAnyThreeToOneOffset) {
  Gen g(25);
  const protocol::LarmorConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = protocol::spin_echo_schedule(500e-9 * g.integer(1, 20), cfg);
    const double delta = g.uniform(-1e5, 1e5);
    EXPECT_NEAR(protocol::echo_residual_phase(s, 3.0 * delta, delta), 0.0, 1e-9);
    EXPECT_NEAR(protocol::echo_residual_phase(s, cfg, delta), 0.0, 1e-9);
  }
}

}  // namespace
