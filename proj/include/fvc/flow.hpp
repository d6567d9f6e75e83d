#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "fvc/distortion.hpp"
#include "fvc/raster.hpp"

namespace fvc {

struct FlowConfig {
  int pyramid_levels = 4;
  int window = 7;       // odd, >= 3
  int iterations = 5;   // per level
  double smoothing_sigma = 1.0;

  std::string to_json() const;
  static FlowConfig from_json(const std::string& text);
};

// Dense coarse-to-fine Lucas-Kanade flow from a to b, i.e. a(p) tracks to
// b(p + flow(p)). RGB input is reduced to Rec. 601 luma. Pixels whose local
// structure tensor is rank-deficient (smaller eigenvalue below 1e-4 of the
// dynamic range squared) are masked invalid.
FlowField estimate_flow(const Frame& a, const Frame& b, const FlowConfig& cfg);

struct FrameEstimate {
  DistortionParams params;
  double confidence = 0.0;  // [0,1]
  int frame_index = 0;
};

// Per-coefficient Gaussian perturbation scale; by convention a scalar sigma
// from the CLI perturbs k1 only.
using NoiseSigma = std::array<double, 3>;

// Ground-truth params plus zero-mean Gaussian jitter, deterministic in
// (seed, frame_index); re-draws until the monotonicity guard covers the
// frame (<= 100 attempts).
FrameEstimate oracle_noisy_estimator(const DistortionParams& gt,
                                     const NoiseSigma& sigma,
                                     std::uint64_t seed, int frame_index);

// Classical per-frame estimator: coordinate descent with golden-section
// line search over (k1, k2), minimizing the masked mean absolute
// photometric error between the corrected fisheye frame and the reference.
// k3 is held at init. At most 200 objective evaluations. When the objective
// cannot be reduced from init, returns init with confidence 0.
FrameEstimate photometric_search_estimator(const Frame& fisheye,
                                           const Frame& reference,
                                           const DistortionParams& init,
                                           int frame_index = 0);

}  // namespace fvc
