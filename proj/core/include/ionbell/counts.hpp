#pragma once

// Dense (setting, outcome, Larmor-phase bin) count tables.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ionbell/events.hpp"

namespace ionbell::mc {

class CountsTable {
 public:
  /// Throws std::invalid_argument unless all dimensions are positive.
  CountsTable(int n_settings, int n_outcomes, int n_bins);

  int n_settings() const { return n_settings_; }
  int n_outcomes() const { return n_outcomes_; }
  int n_bins() const { return n_bins_; }

  double& at(int setting, int outcome, int bin);
  double at(int setting, int outcome, int bin) const;
  void add(int setting, int outcome, int bin, double weight = 1.0);

  double total() const;
  double setting_total(int setting) const;
  /// Sum over outcomes for one (setting, bin).
  double cell_total(int setting, int bin) const;

  /// Same counts with all bins merged into one.
  CountsTable merged_bins() const;

  const std::vector<double>& raw() const { return data_; }
  std::vector<double>& raw() { return data_; }

 private:
  std::size_t index(int setting, int outcome, int bin) const;
  int n_settings_;
  int n_outcomes_;
  int n_bins_;
  std::vector<double> data_;
};

/// Bin of a serialized phase: floor(phase / (2 pi / N)), clamped to N - 1.
int phase_bin(std::int32_t phase_mrad, int n_bins);
/// Same for a continuous phase, wrapped into [0, 2 pi) first.
int phase_bin(double phase_rad, int n_bins);
/// Centre of a bin in radians.
double bin_centre(int bin, int n_bins);

/// Generic binning. setting = 2 * basis + (1 for the superposition readout),
/// outcome = 2 * click + atomic bit. Throws std::invalid_argument for N < 2.
CountsTable larmor_bin(const std::vector<EventRecord>& events, int n_bins);

// Experiment-specific tables. Each collects the events of one passage (or
// one Bell outcome) and uses the layout documented per function.

/// Entanglement transfer, one passage. setting = 3 * readout + basis with
/// readout 0 = shelving, 1 = superposition; outcome = 2 * click + atomic bit.
/// The bin uses the frame phase, shifted by pi for a V herald: the V-heralded
/// state equals the H-heralded one up to a sigma_z on the atom.
CountsTable transfer_counts(const std::vector<EventRecord>& events, Passage passage, int n_bins);
void add_transfer_event(CountsTable& table, const EventRecord& e);

/// Photon-to-atom mapping, one passage and herald-folded like transfer_counts.
/// setting = 2 * input + readout with input = 2 * basis + detector (0..5);
/// outcome = atomic bit.
CountsTable mapping_counts(const std::vector<EventRecord>& events, Passage passage, int n_bins);
void add_mapping_event(CountsTable& table, const EventRecord& e);

/// Teleportation, events of one Bell outcome. setting = 3 * input + basis,
/// outcome = click. `n_inputs` D-qubit inputs are cycled over runs.
CountsTable teleport_counts(const std::vector<EventRecord>& events, qmath::BellState bell,
                            std::size_t n_inputs, int n_bins);
void add_teleport_event(CountsTable& table, const EventRecord& e, std::size_t n_inputs);

/// Bell outcome selected by an event's (passage, herald, atomic) triple.
/// Throws std::invalid_argument for a shelving readout.
qmath::BellState event_bell_state(const EventRecord& e);

}  // namespace ionbell::mc
