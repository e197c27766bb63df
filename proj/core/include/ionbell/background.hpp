#pragma once

// Flat-floor subtraction of accidental coincidences.
//
// Accidentals carry uniformly random outcome bits and uniformly distributed
// phases, so within one setting they spread evenly over every
// (outcome, bin) cell. An estimate therefore only needs the expected number
// of accidentals per setting.

#include <vector>

#include "ionbell/counts.hpp"

namespace ionbell::estimation {

struct BackgroundEstimate {
  std::vector<double> per_setting;  // expected accidental counts
  double total() const;
};

/// No background.
BackgroundEstimate no_background(const mc::CountsTable& counts);
/// Exact accidental counts per setting from a table built from truth-flagged accidentals only.
BackgroundEstimate background_from_truth(const mc::CountsTable& accidentals_only);
/// A total accidental count shared equally between settings (settings are
/// cycled uniformly over runs, and accidentals are independent of the state).
BackgroundEstimate background_from_total(const mc::CountsTable& counts, double total_accidentals);
/// A fraction f of the registered events is accidental.
BackgroundEstimate background_from_fraction(const mc::CountsTable& counts, double fraction);
/// In-gate accidentals inferred from out-of-gate sideband counts.
double accidentals_from_sidebands(double sideband_counts, double sideband_to_gate_ratio);

/// Subtracts A_s / (outcomes x bins) from every cell of setting s, floors at
/// zero, and rescales the setting so its total is max(N_s - A_s, 0).
mc::CountsTable background_correct(const mc::CountsTable& counts, const BackgroundEstimate& bg);

}  // namespace ionbell::estimation
