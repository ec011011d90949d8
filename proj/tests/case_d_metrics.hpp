#pragma once

// Error measures for the noisy case d scenario. Noise is judged against the
// filter's own noise-free answer (case c), not against R_true, because the
// fused estimate deliberately sits between the haptic and vision answers.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "hcf/sim.hpp"

namespace hcf::testing {

struct CaseDMetrics {
  double peak_trace_error = 0.0;   // max over the trajectory, vs reference
  double final_trace_error = 0.0;  // vs reference
};

inline CaseDMetrics case_d_metrics(const TrajectoryRecord& rec, const RotationMatrix& reference) {
  CaseDMetrics m;
  for (const TrajectoryRow& row : rec.rows) {
    m.peak_trace_error = std::max(m.peak_trace_error, trace_error(reference, row.r_hat));
  }
  m.final_trace_error = trace_error(reference, rec.summary.final_r_hat);
  return m;
}

/// Noise-free case c run: its final estimate is the reference, its peak the
/// noise-free peak.
struct CaseDReference {
  RotationMatrix final_r_hat;
  double noise_free_peak = 0.0;
};

inline CaseDReference case_d_reference() {
  const TrajectoryRecord clean = run(preset("case_c"));
  CaseDReference ref;
  ref.final_r_hat = clean.summary.final_r_hat;
  ref.noise_free_peak = case_d_metrics(clean, ref.final_r_hat).peak_trace_error;
  return ref;
}

inline TrajectoryRecord run_case_d(std::uint64_t seed) {
  ScenarioConfig c = preset("case_d");
  c.seed = seed;
  return run(c);
}

}  // namespace hcf::testing
