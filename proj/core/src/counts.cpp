#include "ionbell/counts.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ionbell/simulator.hpp"

namespace ionbell::mc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int basis_index(PolarizationBasis b) {
  switch (b) {
    case PolarizationBasis::HV: return 0;
    case PolarizationBasis::DA: return 1;
    case PolarizationBasis::RL: return 2;
  }
  return 0;
}

void require_bins(int n_bins) {
  if (n_bins < 2) throw std::invalid_argument("larmor binning needs at least 2 bins");
}

int folded_bin(const EventRecord& e, int n_bins) {
  double phase = e.phase_rad();
  if (e.herald == Herald::V) phase += std::numbers::pi;
  return phase_bin(phase, n_bins);
}

}  // namespace

CountsTable::CountsTable(int n_settings, int n_outcomes, int n_bins)
    : n_settings_(n_settings), n_outcomes_(n_outcomes), n_bins_(n_bins) {
  if (n_settings <= 0 || n_outcomes <= 0 || n_bins <= 0) {
    throw std::invalid_argument("CountsTable: dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(n_settings) * n_outcomes * n_bins, 0.0);
}

std::size_t CountsTable::index(int setting, int outcome, int bin) const {
  if (setting < 0 || setting >= n_settings_ || outcome < 0 || outcome >= n_outcomes_ || bin < 0 ||
      bin >= n_bins_) {
    throw std::out_of_range("CountsTable: index out of range");
  }
  return (static_cast<std::size_t>(setting) * n_outcomes_ + outcome) * n_bins_ + bin;
}

double& CountsTable::at(int setting, int outcome, int bin) {
  return data_[index(setting, outcome, bin)];
}

double CountsTable::at(int setting, int outcome, int bin) const {
  return data_[index(setting, outcome, bin)];
}

void CountsTable::add(int setting, int outcome, int bin, double weight) {
  data_[index(setting, outcome, bin)] += weight;
}

double CountsTable::total() const {
  double t = 0.0;
  for (double x : data_) t += x;
  return t;
}

double CountsTable::setting_total(int setting) const {
  double t = 0.0;
  for (int o = 0; o < n_outcomes_; ++o) {
    for (int b = 0; b < n_bins_; ++b) t += at(setting, o, b);
  }
  return t;
}

double CountsTable::cell_total(int setting, int bin) const {
  double t = 0.0;
  for (int o = 0; o < n_outcomes_; ++o) t += at(setting, o, bin);
  return t;
}

CountsTable CountsTable::merged_bins() const {
  CountsTable out(n_settings_, n_outcomes_, 1);
  for (int s = 0; s < n_settings_; ++s) {
    for (int o = 0; o < n_outcomes_; ++o) {
      for (int b = 0; b < n_bins_; ++b) out.add(s, o, 0, at(s, o, b));
    }
  }
  return out;
}

int phase_bin(double phase_rad, int n_bins) {
  require_bins(n_bins);
  double p = std::fmod(phase_rad, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  const int bin = static_cast<int>(std::floor(p / (kTwoPi / n_bins)));
  return bin >= n_bins ? n_bins - 1 : bin;
}

int phase_bin(std::int32_t phase_mrad, int n_bins) {
  return phase_bin(1e-3 * static_cast<double>(phase_mrad), n_bins);
}

double bin_centre(int bin, int n_bins) {
  require_bins(n_bins);
  return (bin + 0.5) * kTwoPi / n_bins;
}

CountsTable larmor_bin(const std::vector<EventRecord>& events, int n_bins) {
  require_bins(n_bins);
  CountsTable t(6, 4, n_bins);
  for (const auto& e : events) {
    const int setting = 2 * basis_index(e.basis) + (is_shelving(e.atomic) ? 0 : 1);
    t.add(setting, 2 * e.click + atomic_bit(e.atomic), phase_bin(e.phase_mrad, n_bins));
  }
  return t;
}

void add_transfer_event(CountsTable& table, const EventRecord& e) {
  const int setting = 3 * (is_shelving(e.atomic) ? 0 : 1) + basis_index(e.basis);
  table.add(setting, 2 * e.click + atomic_bit(e.atomic), folded_bin(e, table.n_bins()));
}

CountsTable transfer_counts(const std::vector<EventRecord>& events, Passage passage, int n_bins) {
  require_bins(n_bins);
  CountsTable t(6, 4, n_bins);
  for (const auto& e : events) {
    if (e.passage == passage) add_transfer_event(t, e);
  }
  return t;
}

void add_mapping_event(CountsTable& table, const EventRecord& e) {
  const int input = 2 * basis_index(e.basis) + e.click;
  const int setting = 2 * input + (is_shelving(e.atomic) ? 0 : 1);
  table.add(setting, atomic_bit(e.atomic), folded_bin(e, table.n_bins()));
}

CountsTable mapping_counts(const std::vector<EventRecord>& events, Passage passage, int n_bins) {
  require_bins(n_bins);
  CountsTable t(12, 2, n_bins);
  for (const auto& e : events) {
    if (e.passage == passage) add_mapping_event(t, e);
  }
  return t;
}

void add_teleport_event(CountsTable& table, const EventRecord& e, std::size_t n_inputs) {
  const TeleportSetting s = teleport_setting(e.run_index, n_inputs);
  const int setting = 3 * static_cast<int>(s.input_index) + basis_index(e.basis);
  table.add(setting, e.click, phase_bin(e.phase_mrad, table.n_bins()));
}

CountsTable teleport_counts(const std::vector<EventRecord>& events, qmath::BellState bell,
                            std::size_t n_inputs, int n_bins) {
  require_bins(n_bins);
  CountsTable t(3 * static_cast<int>(n_inputs), 2, n_bins);
  for (const auto& e : events) {
    if (event_bell_state(e) == bell) add_teleport_event(t, e, n_inputs);
  }
  return t;
}

qmath::BellState event_bell_state(const EventRecord& e) {
  if (is_shelving(e.atomic)) {
    throw std::invalid_argument("event_bell_state: shelving readout carries no Bell outcome");
  }
  const auto a = e.atomic == AtomicOutcome::plus ? protocol::AtomicProjection::plus
                                                 : protocol::AtomicProjection::minus;
  return protocol::BellOutcome::from_triple(e.passage, e.herald, a).bell();
}

}  // namespace ionbell::mc
