#pragma once

#include <Eigen/Core>

namespace kreg {

/// se(3) tangent vector. Coordinate ordering is (omega, v) everywhere in
/// this library: rotational part first, translational part second.
struct Twist {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();  // radians
  Eigen::Vector3d v = Eigen::Vector3d::Zero();      // meters

  double norm() const;
  Twist scaled(double s) const;

  static Twist Zero() { return {}; }
};

/// Rigid transform stored as an orthonormal rotation matrix plus translation.
struct Isometry {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Isometry Identity() { return {}; }

  Eigen::Matrix4d matrix() const;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& w);

/// 4x4 embedding of a twist, omega as the skew block.
Eigen::Matrix4d hat(const Twist& xi);
Twist vee(const Eigen::Matrix4d& m);

/// Closed-form exponential map (Rodrigues). Falls back to a second-order
/// Taylor expansion of the rotation and V-matrix below ||omega|| = 1e-8.
/// Throws std::invalid_argument on non-finite input.
Isometry exp(const Twist& xi);

/// Inverse of exp. The rotation angle is returned in [0, pi]; the extraction
/// goes through a quaternion (Shepperd's method) so the axis stays stable
/// near pi where R - R^T degenerates.
Twist log(const Isometry& T);

Isometry compose(const Isometry& a, const Isometry& b);
Isometry inverse(const Isometry& T);
Eigen::Vector3d apply(const Isometry& T, const Eigen::Vector3d& p);

/// arccos((trace(R) - 1) / 2), argument clamped to [-1, 1].
double rotation_angle(const Isometry& T);
double translation_norm(const Isometry& T);

/// Checks R^T R = I and det(R) = +1 within tol (Frobenius).
bool is_valid_rotation(const Eigen::Matrix3d& R, double tol = 1e-9);

/// Nearest orthonormal matrix (polar projection via SVD).
Eigen::Matrix3d orthonormalized(const Eigen::Matrix3d& R);

}  // namespace kreg
