#include "ionbell/background.hpp"

#include <algorithm>
#include <stdexcept>

namespace ionbell::estimation {

double BackgroundEstimate::total() const {
  double t = 0.0;
  for (double x : per_setting) t += x;
  return t;
}

BackgroundEstimate no_background(const mc::CountsTable& counts) {
  return BackgroundEstimate{std::vector<double>(static_cast<std::size_t>(counts.n_settings()), 0.0)};
}

BackgroundEstimate background_from_truth(const mc::CountsTable& accidentals_only) {
  BackgroundEstimate bg;
  for (int s = 0; s < accidentals_only.n_settings(); ++s) {
    bg.per_setting.push_back(accidentals_only.setting_total(s));
  }
  return bg;
}

BackgroundEstimate background_from_total(const mc::CountsTable& counts, double total_accidentals) {
  if (total_accidentals < 0.0) throw std::invalid_argument("background: negative accidental total");
  return BackgroundEstimate{std::vector<double>(static_cast<std::size_t>(counts.n_settings()),
                                                total_accidentals / counts.n_settings())};
}

BackgroundEstimate background_from_fraction(const mc::CountsTable& counts, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("background: accidental fraction must lie in [0, 1)");
  }
  return background_from_total(counts, fraction * counts.total());
}

double accidentals_from_sidebands(double sideband_counts, double sideband_to_gate_ratio) {
  if (!(sideband_to_gate_ratio > 0.0)) {
    throw std::invalid_argument("background: sideband ratio must be positive");
  }
  return sideband_counts / sideband_to_gate_ratio;
}

mc::CountsTable background_correct(const mc::CountsTable& counts, const BackgroundEstimate& bg) {
  if (static_cast<int>(bg.per_setting.size()) != counts.n_settings()) {
    throw std::invalid_argument("background_correct: estimate does not match the table");
  }
  mc::CountsTable out = counts;
  const double cells = static_cast<double>(counts.n_outcomes()) * counts.n_bins();
  for (int s = 0; s < counts.n_settings(); ++s) {
    const double a = bg.per_setting[static_cast<std::size_t>(s)];
    if (a <= 0.0) continue;
    const double floor_per_cell = a / cells;
    double kept = 0.0;
    for (int o = 0; o < counts.n_outcomes(); ++o) {
      for (int b = 0; b < counts.n_bins(); ++b) {
        double& c = out.at(s, o, b);
        c = std::max(c - floor_per_cell, 0.0);
        kept += c;
      }
    }
    const double target = std::max(counts.setting_total(s) - a, 0.0);
    const double scale = kept > 0.0 ? target / kept : 0.0;
    for (int o = 0; o < counts.n_outcomes(); ++o) {
      for (int b = 0; b < counts.n_bins(); ++b) out.at(s, o, b) *= scale;
    }
  }
  return out;
}

}  // namespace ionbell::estimation
