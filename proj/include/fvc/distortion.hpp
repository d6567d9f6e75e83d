#pragma once

#include <optional>
#include <string>

#include "fvc/geometry.hpp"
#include "fvc/raster.hpp"

namespace fvc {

// Radial polynomial lens model. Coefficients act on the radius normalized
// by norm_radius, so the same k values describe the same distortion at any
// resolution. norm_radius defaults to the frame half-diagonal.
struct DistortionParams {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  PixelCoord center{0.0, 0.0};
  double norm_radius = 1.0;

  bool identity() const { return k1 == 0.0 && k2 == 0.0 && k3 == 0.0; }
};

// Largest normalized radius the model is asked to cover: half-diagonal of a
// square frame whose half-width equals norm_radius/sqrt(2), i.e. sqrt(2)
// when norm_radius is the half-width. Kept as a fixed cap for the
// monotonicity scan.
inline constexpr double kMaxNormRadius = 1.4142135623730951;

// 1 + k1 r^2 + k2 r^4 + k3 r^6 at r = r_norm.
double radial_scale(double r_norm, const DistortionParams& params);

// g(r) = r * radial_scale(r) and its derivative.
double radial_forward(double r_norm, const DistortionParams& params);
double radial_forward_deriv(double r_norm, const DistortionParams& params);

// Largest r* <= kMaxNormRadius with g'(r) > 0 on [0, r*], sampled at step
// 1e-3. Returns 0 when g'(0) <= 0.
double valid_radius(const DistortionParams& params);

// Distorted -> undistorted mapping (closed form).
PixelCoord undistorted_of(const PixelCoord& pd, const DistortionParams& params);

// Undistorted -> distorted mapping. Solves r_u = g(r_d) by safeguarded
// Newton with a bisection fallback (tol 1e-12 in normalized radius,
// <= 50 iterations). Throws NonInvertible when the target radius exceeds
// g(valid_radius), NoConvergence when the budget runs out.
PixelCoord distorted_of(const PixelCoord& pu, const DistortionParams& params);

// Same mapping but reporting failure instead of throwing; used for
// per-pixel field construction.
std::optional<PixelCoord> try_distorted_of(const PixelCoord& pu,
                                           const DistortionParams& params);

// Backward-warp field W on the corrected grid: W(pu) = distorted_of(pu) - pu,
// so corrected(pu) = fisheye(pu + W(pu)). Pixels outside the invertible
// range are masked invalid.
FlowField intra_frame_flow(const DistortionParams& params, int width,
                           int height);

// Default params for a w x h frame: identity coefficients, centered,
// norm_radius = half-diagonal.
DistortionParams default_params(int width, int height);

// JSON form: {"k":[k1,k2,k3],"center":[x0,y0],"norm_radius":v}.
std::string params_to_json(const DistortionParams& params);
DistortionParams params_from_json(const std::string& text);

}  // namespace fvc
