#pragma once

// Rotation-group algebra on 3x3 matrices: hat/vex, the anti-symmetric
// projection, exact Rodrigues integration, error metrics and conversions
// to ZYX Euler angles and axis-angle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hcf/errors.hpp"
#include "hcf/random.hpp"

namespace hcf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kRotationTolerance = 1e-9;
inline constexpr double kSkewTolerance = 1e-9;
inline constexpr double kGimbalGuard = 1e-9;

/// Frobenius norm of m·mᵀ − I.
inline double orthonormality_defect(const Mat3& m) {
  return (m * m.transpose() - Mat3::Identity()).norm();
}

/// Nearest rotation to `m` in the Frobenius sense (polar factor via SVD).
inline Mat3 polar_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

/**
 * Element of SO(3). Construction through from_matrix() checks
 * m·mᵀ = I and det m = +1 within kRotationTolerance.
 */
class RotationMatrix {
 public:
  RotationMatrix() : m_(Mat3::Identity()) {}

  static RotationMatrix identity() { return RotationMatrix(); }

  /// Validating constructor; throws InvalidArgument when `m` is not a rotation.
  static RotationMatrix from_matrix(const Mat3& m) {
    if (!m.allFinite()) throw InvalidArgument("rotation matrix has non-finite entries");
    const double defect = orthonormality_defect(m);
    if (defect > kRotationTolerance) {
      throw InvalidArgument("matrix is not orthonormal (defect " + std::to_string(defect) + ")");
    }
    if (std::abs(m.determinant() - 1.0) > kRotationTolerance) {
      throw InvalidArgument("matrix determinant is not +1");
    }
    return RotationMatrix(m);
  }

  /// Skips validation. Only for results of operations closed on SO(3).
  static RotationMatrix assume_valid(const Mat3& m) { return RotationMatrix(m); }

  const Mat3& matrix() const { return m_; }
  double operator()(int row, int col) const { return m_(row, col); }

  RotationMatrix transpose() const { return RotationMatrix(m_.transpose()); }
  double trace() const { return m_.trace(); }
  double defect() const { return orthonormality_defect(m_); }

  friend RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b) {
    return RotationMatrix(a.m_ * b.m_);
  }
  friend Vec3 operator*(const RotationMatrix& r, const Vec3& v) { return r.m_ * v; }
  friend bool operator==(const RotationMatrix& a, const RotationMatrix& b) { return a.m_ == b.m_; }

 private:
  explicit RotationMatrix(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Element of so(3), stored as its vector so m + mᵀ = 0 holds exactly.
class SkewMatrix {
 public:
  SkewMatrix() : w_(Vec3::Zero()) {}
  explicit SkewMatrix(const Vec3& w) : w_(w) {}

  const Vec3& vector() const { return w_; }

  Mat3 matrix() const {
    Mat3 s;
    s << 0.0, -w_.z(), w_.y(),
         w_.z(), 0.0, -w_.x(),
         -w_.y(), w_.x(), 0.0;
    return s;
  }

  friend bool operator==(const SkewMatrix& a, const SkewMatrix& b) { return a.w_ == b.w_; }

 private:
  Vec3 w_;
};

struct EulerZYX {
  double yaw = 0.0;    // ψ, about z
  double pitch = 0.0;  // θ, about y
  double roll = 0.0;   // φ, about x
};

struct AxisAngle {
  Vec3 axis = Vec3::UnitX();
  double angle = 0.0;

  /// Point in the closed π-ball.
  Vec3 vector() const { return axis * angle; }
};

inline SkewMatrix hat(const Vec3& w) { return SkewMatrix(w); }

inline Vec3 vex(const SkewMatrix& s) { return s.vector(); }

/// vex of a raw matrix; rejects inputs with a symmetric part above kSkewTolerance.
inline Vec3 vex(const Mat3& s) {
  const double sym = (0.5 * (s + s.transpose())).norm();
  if (sym > kSkewTolerance) {
    throw InvalidArgument("vex: matrix is not anti-symmetric (symmetric part " +
                          std::to_string(sym) + ")");
  }
  return Vec3(0.5 * (s(2, 1) - s(1, 2)), 0.5 * (s(0, 2) - s(2, 0)), 0.5 * (s(1, 0) - s(0, 1)));
}

/// Pa(a) = ½(a − aᵀ).
inline SkewMatrix pa_projection(const Mat3& a) {
  return SkewMatrix(
      Vec3(0.5 * (a(2, 1) - a(1, 2)), 0.5 * (a(0, 2) - a(2, 0)), 0.5 * (a(1, 0) - a(0, 1))));
}

/// Unnormalized sinc with sinc(0) = 1.
inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

/**
 * One exact integration step of Ṙ = R·hat(rate) over `dt` seconds with the
 * rate held constant:
 *
 *   R·(I + α·dt·hat(a) + γ·(dt·hat(a))²),  α = sinc(dt‖a‖),  γ = ½·sinc²(dt‖a‖/2)
 *
 * ‖a‖ is the Euclidean norm of the rate vector, which makes the increment the
 * exact matrix exponential. Rounding drift is monitored and removed by a polar
 * renormalization only if the defect exceeds kRotationTolerance.
 */
inline Mat3 rodrigues_increment(const Vec3& rate, double dt) {
  const double angle = dt * rate.norm();
  const double alpha = sinc(angle);
  const double half = sinc(0.5 * angle);
  const double gamma = 0.5 * half * half;
  const Mat3 k = dt * hat(rate).matrix();
  return Mat3::Identity() + alpha * k + gamma * (k * k);
}

/// One guarded step: R·rodrigues_increment(rate, dt).
inline RotationMatrix rodrigues_step(const RotationMatrix& r, const Vec3& rate, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("rodrigues_step: dt must be positive");
  Mat3 next = r.matrix() * rodrigues_increment(rate, dt);
  if (orthonormality_defect(next) > kRotationTolerance) next = polar_rotation(next);
  return RotationMatrix::assume_valid(next);
}

/// exp(hat(v)) for an axis-angle vector v.
inline RotationMatrix exp_so3(const Vec3& v) {
  return rodrigues_step(RotationMatrix::identity(), v, 1.0);
}

/// R̃ = R̂ᵀ·Rv.
inline RotationMatrix rotation_error(const RotationMatrix& r_hat, const RotationMatrix& r_meas) {
  return RotationMatrix::assume_valid(r_hat.matrix().transpose() * r_meas.matrix());
}

/// trace(I − R_trueᵀ·R̂), clamped to [0, 4] against rounding.
inline double trace_error(const RotationMatrix& r_true, const RotationMatrix& r_hat) {
  return std::clamp(3.0 - (r_true.matrix().transpose() * r_hat.matrix()).trace(), 0.0, 4.0);
}

/// Rotation angle of `r` in [0, π], accurate at both ends of the range.
inline double rotation_angle(const RotationMatrix& r) {
  const double s = pa_projection(r.matrix()).vector().norm();
  const double c = 0.5 * (r.trace() - 1.0);
  return std::atan2(s, c);
}

/// Geodesic distance between two rotations.
inline double geodesic_distance(const RotationMatrix& a, const RotationMatrix& b) {
  return rotation_angle(rotation_error(a, b));
}

inline RotationMatrix rot_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return RotationMatrix::assume_valid(m);
}

inline RotationMatrix rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return RotationMatrix::assume_valid(m);
}

inline RotationMatrix rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return RotationMatrix::assume_valid(m);
}

/// Rz(ψ)·Ry(θ)·Rx(φ).
inline RotationMatrix from_euler_zyx(const EulerZYX& e) {
  return rot_z(e.yaw) * rot_y(e.pitch) * rot_x(e.roll);
}

/// Throws GimbalLockError when |r31| > 1 − kGimbalGuard.
inline EulerZYX to_euler_zyx(const RotationMatrix& r) {
  const Mat3& m = r.matrix();
  if (std::abs(m(2, 0)) > 1.0 - kGimbalGuard) {
    throw GimbalLockError("ZYX Euler angles undefined at pitch = ±π/2");
  }
  EulerZYX e;
  e.yaw = std::atan2(m(1, 0), m(0, 0));
  e.pitch = std::atan2(-m(2, 0), std::hypot(m(2, 1), m(2, 2)));
  e.roll = std::atan2(m(2, 1), m(2, 2));
  if (e.yaw == -std::numbers::pi) e.yaw = std::numbers::pi;
  if (e.roll == -std::numbers::pi) e.roll = std::numbers::pi;
  return e;
}

/// Like to_euler_zyx, but at gimbal lock reports roll = 0 and folds the
/// remaining rotation into yaw. Used for logging.
inline EulerZYX to_euler_zyx_lenient(const RotationMatrix& r) {
  const Mat3& m = r.matrix();
  if (std::abs(m(2, 0)) <= 1.0 - kGimbalGuard) return to_euler_zyx(r);
  EulerZYX e;
  e.pitch = m(2, 0) < 0.0 ? 0.5 * std::numbers::pi : -0.5 * std::numbers::pi;
  e.roll = 0.0;
  e.yaw = std::atan2(-m(0, 1), m(1, 1));
  return e;
}

/**
 * Axis-angle with angle in [0, π]. The identity maps to axis (1,0,0), angle 0.
 * At angle π the axis sign is fixed by making its first nonzero component
 * positive.
 */
inline AxisAngle to_axis_angle(const RotationMatrix& r) {
  const Mat3& m = r.matrix();
  const Vec3 v = pa_projection(m).vector();  // sin θ · axis
  const double s = v.norm();
  const double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  AxisAngle out;
  out.angle = std::atan2(s, c);
  if (s == 0.0 && c > 0.0) return out;
  if (c >= 0.0) {
    out.axis = v / s;
    return out;
  }
  // Past π/2 the symmetric part (1 − cos θ)·a·aᵀ gives a better-conditioned axis.
  const Mat3 b = 0.5 * (m + m.transpose()) - c * Mat3::Identity();
  Eigen::Index k = 0;
  b.diagonal().maxCoeff(&k);
  Vec3 axis = b.col(k).normalized();
  const double along = axis.dot(v);
  if (std::abs(along) > 1e-15) {
    if (along < 0.0) axis = -axis;
  } else {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(axis[i]) > 1e-12) {
        if (axis[i] < 0.0) axis = -axis;
        break;
      }
    }
  }
  out.axis = axis;
  return out;
}

/**
 * Haar-uniform rotation: axis from a normalized Gaussian triple, angle from
 * the density (1 − cos θ)/π on [0, π] by inverting its CDF (θ − sin θ)/π.
 */
inline RotationMatrix random_rotation(Rng& rng) {
  Vec3 axis;
  do {
    axis = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (axis.norm() < 1e-12);
  axis.normalize();

  const double target = std::numbers::pi * rng.uniform();
  double lo = 0.0, hi = std::numbers::pi;
  double theta = 0.5 * std::numbers::pi;
  for (int it = 0; it < 100; ++it) {
    const double g = theta - std::sin(theta) - target;
    if (g > 0.0) hi = theta; else lo = theta;
    const double dg = 1.0 - std::cos(theta);
    double next = dg > 1e-300 ? theta - g / dg : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - theta) < 1e-15) { theta = next; break; }
    theta = next;
  }
  return exp_so3(axis * theta);
}

}  // namespace hcf
