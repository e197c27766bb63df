#include "ionbell/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ionbell::estimation {

RotationEstimate estimate_polarization_rotation(const std::vector<StokesPair>& pairs) {
  if (pairs.size() < 3) throw std::invalid_argument("rotation: need at least 3 vector pairs");
  Eigen::Matrix3Xd p(3, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) p.col(static_cast<Eigen::Index>(k)) = pairs[k].prepared;
  const Eigen::JacobiSVD<Eigen::Matrix3Xd> spread(p);
  const auto& sv = spread.singularValues();
  if (!(sv(0) > 0.0) || sv(2) < 1e-9 * sv(0)) {
    throw std::invalid_argument("rotation: prepared vectors are coplanar");
  }

  Mat3 h = Mat3::Zero();
  for (const auto& pr : pairs) h += pr.measured * pr.prepared.transpose();
  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();

  double sq = 0.0;
  for (const auto& pr : pairs) sq += (r * pr.prepared - pr.measured).squaredNorm();
  return RotationEstimate{r, std::sqrt(sq / static_cast<double>(pairs.size()))};
}

std::vector<Vec3> fibonacci_sphere(int n) {
  if (n < 1) throw std::invalid_argument("fibonacci_sphere: n must be positive");
  std::vector<Vec3> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    out.emplace_back(r * std::cos(golden * k), r * std::sin(golden * k), z);
  }
  return out;
}

Mat3 axis_angle_rotation(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace ionbell::estimation
