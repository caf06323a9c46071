#include "kreg/se3.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace kreg {

namespace {
constexpr double kSmallAngle = 1e-8;
constexpr double kRotationDriftTol = 1e-7;
}  // namespace

double Twist::norm() const { return std::sqrt(omega.squaredNorm() + v.squaredNorm()); }

Twist Twist::scaled(double s) const { return Twist{omega * s, v * s}; }

Eigen::Matrix4d Isometry::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = rotation;
  m.block<3, 1>(0, 3) = translation;
  return m;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return s;
}

Eigen::Matrix4d hat(const Twist& xi) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.block<3, 3>(0, 0) = skew(xi.omega);
  m.block<3, 1>(0, 3) = xi.v;
  return m;
}

Twist vee(const Eigen::Matrix4d& m) {
  Twist xi;
  xi.omega = Eigen::Vector3d(m(2, 1), m(0, 2), m(1, 0));
  xi.v = m.block<3, 1>(0, 3);
  return xi;
}

Isometry exp(const Twist& xi) {
  if (!xi.omega.allFinite() || !xi.v.allFinite()) {
    throw std::invalid_argument("exp: twist has non-finite components");
  }
  const double theta = xi.omega.norm();
  const Eigen::Matrix3d W = skew(xi.omega);
  const Eigen::Matrix3d W2 = W * W;

  Eigen::Matrix3d R, V;
  if (theta < kSmallAngle) {
    R = Eigen::Matrix3d::Identity() + W + 0.5 * W2;
    V = Eigen::Matrix3d::Identity() + 0.5 * W + W2 / 6.0;
  } else {
    const double t2 = theta * theta;
    const double s = std::sin(theta);
    // 1 - cos via half-angle form, exact cancellation-free
    const double half_sin = std::sin(0.5 * theta);
    const double one_minus_cos = 2.0 * half_sin * half_sin;
    const double a = s / theta;
    const double b = one_minus_cos / t2;
    const double c = (theta - s) / (t2 * theta);
    R = Eigen::Matrix3d::Identity() + a * W + b * W2;
    V = Eigen::Matrix3d::Identity() + b * W + c * W2;
  }
  Isometry T;
  T.rotation = R;
  T.translation = V * xi.v;
  return T;
}

Twist log(const Isometry& T) {
  // Quaternion extraction is well-conditioned for every angle, including the
  // R - R^T degenerate neighbourhood of pi.
  Eigen::Quaterniond q(T.rotation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double sin_half = q.vec().norm();
  const double theta = 2.0 * std::atan2(sin_half, q.w());  // in [0, pi]

  Twist xi;
  if (sin_half < 0.5 * kSmallAngle) {
    xi.omega = 2.0 * q.vec();  // first-order: q.vec ~ omega/2
  } else {
    xi.omega = (theta / sin_half) * q.vec();
  }

  const Eigen::Matrix3d W = skew(xi.omega);
  const Eigen::Matrix3d W2 = W * W;
  double c;  // coefficient of W^2 in V^{-1}
  if (theta < 1e-4) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    // (1 - (theta/2) cot(theta/2)) / theta^2, finite at theta = pi
    const double half = 0.5 * theta;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  }
  const Eigen::Matrix3d Vinv = Eigen::Matrix3d::Identity() - 0.5 * W + c * W2;
  xi.v = Vinv * T.translation;
  return xi;
}

Isometry compose(const Isometry& a, const Isometry& b) {
  Isometry out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  // Long chains of products drift off the manifold; project back when the
  // drift becomes measurable.
  const Eigen::Matrix3d gram = out.rotation.transpose() * out.rotation;
  if ((gram - Eigen::Matrix3d::Identity()).norm() > kRotationDriftTol) {
    out.rotation = orthonormalized(out.rotation);
  }
  return out;
}

Isometry inverse(const Isometry& T) {
  Isometry out;
  out.rotation = T.rotation.transpose();
  out.translation = -(out.rotation * T.translation);
  return out;
}

Eigen::Vector3d apply(const Isometry& T, const Eigen::Vector3d& p) {
  return T.rotation * p + T.translation;
}

double rotation_angle(const Isometry& T) {
  double c = 0.5 * (T.rotation.trace() - 1.0);
  c = std::min(1.0, std::max(-1.0, c));
  return std::acos(c);
}

double translation_norm(const Isometry& T) { return T.translation.norm(); }

bool is_valid_rotation(const Eigen::Matrix3d& R, double tol) {
  const Eigen::Matrix3d gram = R.transpose() * R;
  if ((gram - Eigen::Matrix3d::Identity()).norm() > tol) return false;
  return std::abs(R.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d orthonormalized(const Eigen::Matrix3d& R) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0.0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    out = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return out;
}

}  // namespace kreg
