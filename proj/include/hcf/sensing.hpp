#pragma once

// Measurement models: the virtual-spring force prediction, the haptic
// mismatch residual, vision frame composition and force-sensor noise.

#include <cmath>
#include <cstdint>

#include "hcf/errors.hpp"
#include "hcf/random.hpp"
#include "hcf/so3.hpp"
#include "hcf/superquadric.hpp"

namespace hcf {

/// One end-effector with its force sensor.
struct HapticChannel {
  double k_c = 1.0;                          // spring coefficient, N/m
  double beta = -1.0;                        // admittance weight
  Vec3 ee_position_world = Vec3::Zero();     // m, in {W}
  Vec3 f_measured = Vec3::Zero();            // N
};

/// Camera pose in the world and peg orientation seen by the camera.
struct VisionMeasurement {
  RotationMatrix r_cam_world;
  RotationMatrix r_peg_cam;
};

/// Zero-order-hold Gaussian noise on a force sensor.
struct ForceNoiseModel {
  double mean = 0.0;         // N
  double variance = 0.0;     // N²
  double sample_time = 0.2;  // s
  std::uint64_t seed = 0;

  void validate() const {
    if (!(variance >= 0.0)) throw InvalidArgument("noise variance must be non-negative");
    if (!(sample_time > 0.0)) throw InvalidArgument("noise sample_time must be positive");
  }
};

/**
 * Spring force predicted under the estimate R̂, in the estimated peg frame:
 * f_e = k_c · radial_displacement(sq, R̂ᵀ·p).
 */
inline Vec3 estimated_force(const Superquadric& sq, const RotationMatrix& r_hat,
                            const Vec3& ee_position_world, double k_c) {
  const Vec3 local = r_hat.matrix().transpose() * ee_position_world;
  return k_c * radial_displacement(sq, local).d;
}

/// f_h = f_e × f.
inline Vec3 haptic_mismatch(const Vec3& f_estimated, const Vec3& f_measured) {
  return f_estimated.cross(f_measured);
}

/// Peg orientation in the world from the camera measurement.
inline RotationMatrix vision_world_rotation(const VisionMeasurement& v) {
  return v.r_cam_world * v.r_peg_cam;
}

/// Index of the hold interval containing time t.
inline std::uint64_t noise_sample_index(const ForceNoiseModel& model, double t) {
  return static_cast<std::uint64_t>(std::floor(t / model.sample_time + 1e-9));
}

/**
 * Adds held Gaussian noise to each component. The sample for component i
 * over hold interval k is a pure function of (seed, i, k), so no generator
 * state is carried between calls.
 */
inline Vec3 apply_force_noise(const Vec3& f_clean, const ForceNoiseModel& model, double t) {
  if (model.variance == 0.0 && model.mean == 0.0) return f_clean;
  const std::uint64_t k = noise_sample_index(model, t < 0.0 ? 0.0 : t);
  const double sd = std::sqrt(model.variance);
  Vec3 out = f_clean;
  for (int i = 0; i < 3; ++i) {
    const std::uint64_t key = hash_combine(model.seed, static_cast<std::uint64_t>(i));
    out[i] += model.mean + sd * counter_normal(key, k);
  }
  return out;
}

/// Brings a sensor-frame force into the peg frame using an estimate of the
/// sensor-to-peg rotation (edge grasps, where the frames are not aligned).
inline Vec3 edge_grasp_force_correction(const Vec3& f_ee, const RotationMatrix& r_peg_from_ee_est) {
  return r_peg_from_ee_est * f_ee;
}

}  // namespace hcf
