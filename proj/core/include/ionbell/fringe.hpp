#pragma once

// Sinusoidal fringe fits to binned projection probabilities.

#include <vector>

namespace ionbell::estimation {

/// Attenuation of a sinusoid averaged over one of N equal phase bins: (N / pi) sin(pi / N).
double binning_attenuation(int n_bins);

struct FringePoint {
  double phase;      // bin centre, radians
  double successes;  // events projected onto |+>
  double trials;     // all events in the bin
};

/// Model (V/2) sin(x - phi0) + 1/2.
struct FringeFit {
  double visibility;      // clamped to [0, 1]
  double raw_visibility;  // unclamped, >= 0
  double phi0;            // [0, 2 pi)
  int n_bins;
  double residual;        // weighted sum of squared residuals of the probabilities
};

/// Weighted linear least squares on (sin x, cos x, 1), weights = trials.
/// `points` holds one entry per bin, empty bins included, so N = points.size().
/// With correct_binning the sinusoid is attenuated by binning_attenuation(N)
/// inside the model, so the returned V estimates the unbinned visibility.
/// Needs at least 4 points with trials > 0 and non-degenerate phases;
/// throws std::invalid_argument otherwise. A negative amplitude is reported
/// as V >= 0 with phi0 shifted by pi.
FringeFit fit_fringe(const std::vector<FringePoint>& points, bool correct_binning);

/// Continuous fringe model value.
double fringe_model(double visibility, double phi0, double x);

/// Bloch components implied by a fit of P(+ | x): <sigma_x> = -V sin phi0,
/// <sigma_y> = -V cos phi0. Uses the unclamped amplitude.
struct TransverseBloch {
  double x;
  double y;
};
TransverseBloch transverse_components(const FringeFit& fit);

}  // namespace ionbell::estimation
