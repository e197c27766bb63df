#pragma once

// Fidelity as a function of where the herald falls inside the exposure window.

#include <vector>

#include "ionbell/events.hpp"
#include "ionbell/qmath.hpp"

namespace ionbell::estimation {

struct WindowScanPoint {
  double offset_s;
  double centre_s;
  double fidelity;
  std::size_t events;
};

struct WindowScanResult {
  std::vector<WindowScanPoint> points;
  double slope_per_s;  // least-squares slope of fidelity against window centre
  double intercept;
};

struct WindowScanOptions {
  double width_s = 50e-6;
  std::vector<double> offsets_s;
  mc::Passage passage = mc::Passage::first;
  qmath::BellState target = qmath::BellState::psi_minus;
  int n_bins = 12;
  bool correct_binning = true;
};

/// For each offset, linear tomography on the events of `passage` whose herald
/// time lies in [offset, offset + width), and the overlap with `target`.
/// Throws std::invalid_argument for an empty window or one whose data do not
/// cover every setting.
WindowScanResult detection_window_scan(const std::vector<mc::EventRecord>& events,
                                       const WindowScanOptions& options);

/// Offsets 0, step, 2 step, ... while offset + width <= exposure.
std::vector<double> window_offsets(double exposure_s, double width_s, double step_s);

}  // namespace ionbell::estimation
