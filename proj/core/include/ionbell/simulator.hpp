#pragma once

// Seeded event-level simulation of heralded-absorption runs.
//
// Each run is an exposure window of length `exposure_s` during which photon
// pairs arrive as a Poisson process. Photon A can be absorbed on its first
// pass or, if it survives, 160 ns later on its second pass. Absorption in
// passage p is a POVM s_p R_p^dagger R_p on (photon A, D qubit), so its
// probability depends on the state and all herald / atomic / partner outcomes
// follow from the protocol operators. The scale s_p is fixed by requiring
// that the rate per incoming photon of the registered coincidences matches
// the efficiency chain.
//
// Runs are grouped in chunks; every chunk draws from its own generator seeded
// from (seed, chunk index), so the output does not depend on thread count.

#include <cstdint>
#include <vector>

#include "ionbell/efficiency.hpp"
#include "ionbell/events.hpp"
#include "ionbell/noise.hpp"
#include "ionbell/protocol.hpp"

namespace ionbell::mc {

enum class Experiment { mapping, entanglement_transfer, teleportation };

std::string_view to_string(Experiment e);
Experiment experiment_from_string(std::string_view s);

struct RunConfig {
  std::uint64_t n_runs = 511'670'886;
  double exposure_s = 350e-6;
  std::uint64_t seed = 1;
  double emission_prob = 0.935;
  double gate_halfwidth_s = 84e-9;
  int larmor_bins = 12;

  double second_passage_delay_s = 160e-9;
  double wavepacket_decay_s = 1.0 / (2.0 * 3.14159265358979323846 * 12.29e6);
  /// Accidentals are generated over +-sideband_factor * gate_halfwidth so the
  /// out-of-gate part can serve as a background estimate.
  int sideband_factor = 10;
  std::uint64_t chunk_runs = 1 << 16;
  unsigned threads = 0;  // 0: hardware concurrency
  protocol::LarmorConfig larmor;

  /// Throws std::invalid_argument on non-positive sizes or durations, N < 2,
  /// or emission_prob outside (0, 1].
  void validate() const;
};

struct SimulationModels {
  noise::SourceModel source;
  noise::DephasingModel dephasing;
  noise::BackgroundModel background;
  EfficiencyChain chain;
};

struct ExperimentInputs {
  /// D-qubit inputs (amplitudes of |-5/2>, |+5/2>) cycled over runs in the
  /// teleportation experiment. Default: |-5/2>, |+5/2>, and the equal superposition.
  std::vector<protocol::StateVector> teleport_inputs = default_teleport_inputs();

  static std::vector<protocol::StateVector> default_teleport_inputs();
};

/// Per-run measurement settings. Pure functions of the run index.
struct TransferSetting {
  PolarizationBasis basis;
  bool superposition_readout;  // false: shelving (z)
};
TransferSetting transfer_setting(std::uint64_t run);

struct MappingSetting {
  PolarizationBasis input_basis;
  int input_detector;  // photon prepared in polarization_state(input_basis, input_detector)
  bool superposition_readout;
};
MappingSetting mapping_setting(std::uint64_t run);

struct TeleportSetting {
  std::size_t input_index;
  PolarizationBasis basis;
};
TeleportSetting teleport_setting(std::uint64_t run, std::size_t n_inputs);

/// Absorption POVM scale s_p. Throws std::invalid_argument if it exceeds 1.
double absorption_scale(double eta_abs, double accidental_fraction, double emission_prob);

/// Expected in-gate coincidences per run for one passage, split into signal and accidentals.
struct PassageRates {
  double signal_in_gate = 0.0;
  double accidental_in_gate = 0.0;
  double dark_in_gate = 0.0;
  double total_in_gate() const { return signal_in_gate + accidental_in_gate + dark_in_gate; }
};
PassageRates expected_rates(const RunConfig& cfg, const SimulationModels& models,
                            Passage passage);

struct SimulationResult {
  /// Every herald/partner coincidence inside the acquisition window, ordered
  /// by run index, then herald time, then passage.
  std::vector<EventRecord> candidates;
  std::uint64_t signal_rejected_by_emission = 0;
};

/// Throws std::invalid_argument on an invalid or unphysical configuration.
SimulationResult simulate_runs(const RunConfig& cfg, const SimulationModels& models,
                               Experiment experiment, const ExperimentInputs& inputs = {});

/// Nominal herald-to-partner delay for the passage.
double nominal_delay_ns(const RunConfig& cfg, Passage passage);

/// Keeps events whose partner delay lies within +-halfwidth of the passage's
/// nominal delay. halfwidth <= 0 keeps nothing.
std::vector<EventRecord> coincidence_gate(const std::vector<EventRecord>& events,
                                          double halfwidth_s, const RunConfig& cfg);

struct SidebandTally {
  std::uint64_t first = 0;
  std::uint64_t second = 0;
  /// Out-of-gate window length divided by gate length.
  double width_ratio = 0.0;
};
/// Counts the candidates outside the gate per passage.
SidebandTally sideband_tally(const std::vector<EventRecord>& candidates, const RunConfig& cfg);

/// Probability that an exponential wavepacket with 1/e time `decay_s` falls in the gate.
double gate_acceptance(double halfwidth_s, double decay_s);

}  // namespace ionbell::mc
