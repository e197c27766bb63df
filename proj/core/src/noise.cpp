#include "ionbell/noise.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ionbell::noise {

double werner_weight_for_fidelity(double fidelity) {
  if (!(fidelity >= 0.25 && fidelity <= 1.0)) {
    throw std::invalid_argument("werner_weight_for_fidelity: fidelity must lie in [1/4, 1]");
  }
  return (4.0 * fidelity - 1.0) / 3.0;
}

void SourceModel::validate() const {
  if (!(werner_weight >= 0.0 && werner_weight <= 1.0)) {
    throw std::invalid_argument("SourceModel: werner_weight must lie in [0, 1]");
  }
  if (!(pair_rate_per_power >= 0.0) || !(pump_power_mw >= 0.0) || !(fiber_pair_rate_per_s >= 0.0)) {
    throw std::invalid_argument("SourceModel: rates and pump power must be non-negative");
  }
}

double DephasingModel::coherence(double elapsed_s) const {
  const double x = sigma_rate_per_s * elapsed_s;
  return std::exp(-0.5 * x * x);
}

void DephasingModel::validate() const {
  if (!(sigma_rate_per_s >= 0.0)) {
    throw std::invalid_argument("DephasingModel: sigma_rate must be non-negative");
  }
}

void BackgroundModel::validate() const {
  if (!(accidental_fraction >= 0.0 && accidental_fraction < 1.0)) {
    throw std::invalid_argument("BackgroundModel: accidental_fraction must lie in [0, 1)");
  }
  if (!(dark_rate_393_per_s >= 0.0) || !(dark_rate_854_per_s >= 0.0)) {
    throw std::invalid_argument("BackgroundModel: dark rates must be non-negative");
  }
}

DensityMatrix source_density_matrix(const SourceModel& model) {
  model.validate();
  return qmath::werner(model.werner_weight);
}

Matrix dephase(const Matrix& m, double coherence, qmath::Subsystem which) {
  Matrix out = m;
  if (m.rows() == 2 && m.cols() == 2) {
    out(0, 1) *= coherence;
    out(1, 0) *= coherence;
    return out;
  }
  if (m.rows() != 4 || m.cols() != 4) throw std::invalid_argument("dephase: expected 2x2 or 4x4");
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const int qr = which == qmath::Subsystem::first ? r / 2 : r % 2;
      const int qc = which == qmath::Subsystem::first ? c / 2 : c % 2;
      if (qr != qc) out(r, c) *= coherence;
    }
  }
  return out;
}

DensityMatrix apply_dephasing(const DensityMatrix& state, double elapsed_s,
                              const DephasingModel& model, qmath::Subsystem which) {
  model.validate();
  if (!(elapsed_s >= 0.0)) throw std::invalid_argument("apply_dephasing: negative elapsed time");
  return DensityMatrix(dephase(state.matrix(), model.coherence(elapsed_s), which));
}

double dephased_fidelity_slope(double sigma_rate_per_s, double fit_start_s, double fit_end_s,
                               double contrast) {
  if (!(fit_end_s > fit_start_s) || fit_start_s < 0.0) {
    throw std::invalid_argument("dephased_fidelity_slope: need 0 <= fit_start < fit_end");
  }
  // Composite Simpson on 12/(b-a)^3 * integral (t - mid) g(t) dt.
  constexpr int kIntervals = 4096;
  const double a = fit_start_s;
  const double b = fit_end_s;
  const double mid = 0.5 * (a + b);
  const double h = (b - a) / kIntervals;
  double sum = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double t = a + i * h;
    const double x = sigma_rate_per_s * t;
    const double g = 0.5 * contrast * std::exp(-0.5 * x * x);
    const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * (t - mid) * g;
  }
  const double integral = sum * h / 3.0;
  const double width = b - a;
  return 12.0 * integral / (width * width * width);
}

DephasingModel calibrate_dephasing(double slope_per_s, double fit_start_s, double fit_end_s,
                                   double contrast) {
  if (slope_per_s > 0.0) {
    throw std::invalid_argument("calibrate_dephasing: fidelity slope must not be positive");
  }
  if (!(contrast > 0.0 && contrast <= 1.0)) {
    throw std::invalid_argument("calibrate_dephasing: contrast must lie in (0, 1]");
  }
  if (slope_per_s == 0.0) return DephasingModel{0.0};

  // The slope is zero at sigma = 0, reaches a minimum, then returns to zero as
  // the curve collapses. Invert on the first branch.
  const double scale = 1.0 / fit_end_s;
  double best_sigma = 0.0;
  double best_slope = 0.0;
  for (int i = 1; i <= 400; ++i) {
    const double sigma = scale * 0.025 * i;
    const double s = dephased_fidelity_slope(sigma, fit_start_s, fit_end_s, contrast);
    if (s < best_slope) {
      best_slope = s;
      best_sigma = sigma;
    }
  }
  if (slope_per_s < best_slope) {
    throw std::invalid_argument("calibrate_dephasing: slope " + std::to_string(slope_per_s) +
                                " /s is steeper than the model can produce over the fit range");
  }
  double lo = 0.0;
  double hi = best_sigma;
  for (int iter = 0; iter < 200; ++iter) {
    const double m = 0.5 * (lo + hi);
    if (dephased_fidelity_slope(m, fit_start_s, fit_end_s, contrast) > slope_per_s) {
      lo = m;
    } else {
      hi = m;
    }
  }
  return DephasingModel{0.5 * (lo + hi)};
}

DensityMatrix background_mixture(const DensityMatrix& signal, double accidental_fraction) {
  if (!(accidental_fraction >= 0.0 && accidental_fraction < 1.0)) {
    throw std::invalid_argument("background_mixture: accidental fraction must lie in [0, 1)");
  }
  const auto d = static_cast<Eigen::Index>(signal.dim());
  const Matrix white = Matrix::Identity(d, d) / static_cast<double>(d);
  return DensityMatrix(
      Matrix((1.0 - accidental_fraction) * signal.matrix() + accidental_fraction * white));
}

}  // namespace ionbell::noise
