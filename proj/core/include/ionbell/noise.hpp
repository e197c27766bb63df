#pragma once

// Imperfection models: photon-pair source, accidental background, and
// Gaussian phase noise on the atomic qubit.

#include "ionbell/qmath.hpp"

namespace ionbell::noise {

using qmath::DensityMatrix;
using qmath::Matrix;

/// Werner weight p for which (1 + 3p)/4 equals the given Psi- fidelity.
double werner_weight_for_fidelity(double fidelity);

struct SourceModel {
  double werner_weight = werner_weight_for_fidelity(0.9164);
  double pair_rate_per_power = 5.17e4;  // pairs / (s mW)
  double pump_power_mw = 15.0;
  // Metadata carried into reports; not used by the simulation.
  double linewidth_a_hz = 12.29e6;
  double detuning_b_hz = 480e6;
  double fiber_pair_rate_per_s = 2.69e5;

  double pair_rate_per_s() const { return pair_rate_per_power * pump_power_mw; }
  void validate() const;
};

/// Gaussian phase noise: coherences decay as exp(-(sigma_rate * t)^2 / 2).
struct DephasingModel {
  double sigma_rate_per_s = 0.0;

  double coherence(double elapsed_s) const;
  void validate() const;
};

struct BackgroundModel {
  double accidental_fraction = 0.0;  // P(registered coincidence is accidental)
  double dark_rate_393_per_s = 0.0;  // per detector
  double dark_rate_854_per_s = 0.0;  // per detector

  void validate() const;
};

/// p |Psi-><Psi-| + (1 - p) 1/4 on the photon pair (A, B).
DensityMatrix source_density_matrix(const SourceModel& model);

/// Multiplies the coherences of the addressed qubit by model.coherence(elapsed).
/// For a single-qubit state `which` is ignored.
DensityMatrix apply_dephasing(const DensityMatrix& state, double elapsed_s,
                              const DephasingModel& model,
                              qmath::Subsystem which = qmath::Subsystem::second);

/// Same channel on an arbitrary (possibly unnormalized) 2x2 or 4x4 matrix.
Matrix dephase(const Matrix& m, double coherence, qmath::Subsystem which);

/// Least-squares slope over [fit_start, fit_end] of the Psi--like fidelity
/// curve const + (contrast / 2) exp(-(sigma t)^2 / 2).
double dephased_fidelity_slope(double sigma_rate_per_s, double fit_start_s, double fit_end_s,
                               double contrast = 1.0);

/// Inverts dephased_fidelity_slope for sigma. `slope_per_s` must be <= 0 and
/// reachable by the model over the fit range; otherwise std::invalid_argument.
DephasingModel calibrate_dephasing(double slope_per_s, double fit_start_s, double fit_end_s,
                                   double contrast = 1.0);

/// (1 - f) signal + f 1/dim.
DensityMatrix background_mixture(const DensityMatrix& signal, double accidental_fraction);

}  // namespace ionbell::noise
