#pragma once

// Polarization rotation between two points of a fiber link, estimated from
// pairs of prepared and measured Stokes vectors.

#include <vector>

#include <Eigen/Dense>

namespace ionbell::estimation {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct StokesPair {
  Vec3 prepared;
  Vec3 measured;
};

struct RotationEstimate {
  Mat3 rotation;      // proper rotation, det = +1
  double rms_error;   // sqrt(mean |R p - m|^2)
};

/// Orthogonal Procrustes (Kabsch) fit restricted to proper rotations.
/// Throws std::invalid_argument for fewer than 3 pairs or coplanar prepared vectors.
RotationEstimate estimate_polarization_rotation(const std::vector<StokesPair>& pairs);

/// n unit vectors spread evenly over the sphere (golden-angle spiral).
std::vector<Vec3> fibonacci_sphere(int n);

Mat3 axis_angle_rotation(const Vec3& axis, double angle_rad);
/// Angle of R_a^T R_b, in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

}  // namespace ionbell::estimation
