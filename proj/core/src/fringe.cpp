#include "ionbell/fringe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace ionbell::estimation {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double binning_attenuation(int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("binning_attenuation: need at least one bin");
  const double n = static_cast<double>(n_bins);
  return n / std::numbers::pi * std::sin(std::numbers::pi / n);
}

double fringe_model(double visibility, double phi0, double x) {
  return 0.5 * visibility * std::sin(x - phi0) + 0.5;
}

FringeFit fit_fringe(const std::vector<FringePoint>& points, bool correct_binning) {
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  int used = 0;
  for (const auto& p : points) {
    if (!(p.trials > 0.0)) continue;
    if (p.successes < 0.0 || p.successes > p.trials) {
      throw std::invalid_argument("fit_fringe: successes must lie in [0, trials]");
    }
    ++used;
    const Eigen::Vector3d r(std::sin(p.phase), std::cos(p.phase), 1.0);
    const double y = p.successes / p.trials;
    normal += p.trials * r * r.transpose();
    rhs += p.trials * y * r;
  }
  if (used < 4) throw std::invalid_argument("fit_fringe: need at least 4 populated bins");
  Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
  lu.setThreshold(1e-12);
  if (lu.rank() < 3) throw std::invalid_argument("fit_fringe: degenerate phase sampling");
  const Eigen::Vector3d c = lu.solve(rhs);

  // P = a sin x + b cos x + k, with a = (V/2) cos phi0 and b = -(V/2) sin phi0.
  const double atten = correct_binning ? binning_attenuation(static_cast<int>(points.size())) : 1.0;
  const double a = c(0) / atten;
  const double b = c(1) / atten;
  // The polar form keeps V >= 0; a sign flip of the amplitude shows up as phi0 + pi.
  const double v = 2.0 * std::hypot(a, b);
  double phi0 = std::atan2(-b, a);
  if (phi0 < 0.0) phi0 += kTwoPi;
  if (phi0 >= kTwoPi) phi0 -= kTwoPi;

  double residual = 0.0;
  for (const auto& p : points) {
    if (!(p.trials > 0.0)) continue;
    const double pred = c(0) * std::sin(p.phase) + c(1) * std::cos(p.phase) + c(2);
    const double d = p.successes / p.trials - pred;
    residual += p.trials * d * d;
  }
  return FringeFit{std::clamp(v, 0.0, 1.0), v, phi0, static_cast<int>(points.size()), residual};
}

TransverseBloch transverse_components(const FringeFit& fit) {
  return TransverseBloch{-fit.raw_visibility * std::sin(fit.phi0),
                         -fit.raw_visibility * std::cos(fit.phi0)};
}

}  // namespace ionbell::estimation
