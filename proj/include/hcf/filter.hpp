#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "hcf/errors.hpp"
#include "hcf/sensing.hpp"
#include "hcf/so3.hpp"
#include "hcf/superquadric.hpp"

namespace hcf {

/// Weights of the complementary filter: one admittance weight per arm and
/// the vision gain.
struct FilterGains {
  double beta1 = -1.0;
  double beta2 = -1.0;
  double k_p = 0.0;  // 1/s

  void validate() const {
    if (!(k_p >= 0.0)) throw InvalidArgument("k_p must be non-negative");
    if (beta1 == 0.0 && beta2 == 0.0 && k_p == 0.0) {
      throw InvalidArgument("all filter gains are zero; the filter would be inert");
    }
  }
};

struct FilterState {
  RotationMatrix r_hat;
  double t = 0.0;
  double dt = 0.01;
};

/// Angular-velocity correction in the estimated peg frame.
struct CorrectionTerm {
  Vec3 omega = Vec3::Zero();
};

/// Everything one filter step computed, for logging.
struct StepResult {
  FilterState state;
  Vec3 f_e1 = Vec3::Zero();
  Vec3 f_e2 = Vec3::Zero();
  Vec3 f_h1 = Vec3::Zero();
  Vec3 f_h2 = Vec3::Zero();
  Vec3 sigma = Vec3::Zero();
  CorrectionTerm correction;
};

/// σ = vex(Pa(R̂ᵀ·Rv)). Its norm is |sin θ̃| for error angle θ̃, so it
/// vanishes at θ̃ = π as well as at θ̃ = 0.
inline Vec3 sigma(const RotationMatrix& r_hat, const RotationMatrix& r_vision_world) {
  return pa_projection(rotation_error(r_hat, r_vision_world).matrix()).vector();
}

/// ω = β1·f_h1 + β2·f_h2 + k_p·σ.
inline CorrectionTerm correction(const Vec3& f_h1, const Vec3& f_h2, const Vec3& sigma_term,
                                 const FilterGains& gains) {
  return {gains.beta1 * f_h1 + gains.beta2 * f_h2 + gains.k_p * sigma_term};
}

/// tr(R̃) + 1 ∈ [0, 4]; zero exactly on the unstable set tr(R̃) = −1.
inline double unstable_set_distance(const RotationMatrix& r_err) { return r_err.trace() + 1.0; }

/**
 * Advances the estimate by one step of Ṙ̂ = R̂·hat(ω):
 * predicts each arm's spring force under R̂, forms the haptic residuals
 * against the measured forces, adds the vision innovation when k_p > 0 and
 * integrates with an exact Rodrigues step.
 *
 * The measured forces in `channels` must already be expressed in the peg
 * frame (noise and edge-grasp correction are applied by the caller). The
 * admittance weights come from `gains`; HapticChannel::beta is not read.
 */
inline StepResult filter_step(const FilterState& state, const Superquadric& sq,
                              const std::array<HapticChannel, 2>& channels,
                              const std::optional<VisionMeasurement>& vision,
                              const FilterGains& gains) {
  if (gains.k_p > 0.0 && !vision) {
    throw ValidationError("k_p > 0 requires a vision measurement");
  }
  StepResult out;
  out.f_e1 = estimated_force(sq, state.r_hat, channels[0].ee_position_world, channels[0].k_c);
  out.f_e2 = estimated_force(sq, state.r_hat, channels[1].ee_position_world, channels[1].k_c);
  out.f_h1 = haptic_mismatch(out.f_e1, channels[0].f_measured);
  out.f_h2 = haptic_mismatch(out.f_e2, channels[1].f_measured);
  if (gains.k_p > 0.0) out.sigma = sigma(state.r_hat, vision_world_rotation(*vision));
  out.correction = correction(out.f_h1, out.f_h2, out.sigma, gains);

  out.state.dt = state.dt;
  out.state.t = state.t + state.dt;
  out.state.r_hat = rodrigues_step(state.r_hat, out.correction.omega, state.dt);
  return out;
}

}  // namespace hcf
