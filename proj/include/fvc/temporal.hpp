#pragma once

#include <vector>

#include "fvc/distortion.hpp"
#include "fvc/flow.hpp"
#include "fvc/raster.hpp"

namespace fvc {

// Arithmetic-progression convex weights; index 0 (the largest weight)
// attaches to the OLDEST frame of the window.
struct WeightScheme {
  int n = 5;
  double a1 = 0.3;
  std::vector<double> weights;
};

// a_i = a1 - (i-1) d with d = 2(n a1 - 1)/(n (n-1)). Strictly decreasing
// positive weights require a1 in the open interval (1/n, 2/n); anything
// else throws InvalidWeightRange.
WeightScheme make_weights(int n, double a1);

// Per-pixel convex combination; validity is the conjunction of the inputs.
FlowField tws_combine(const std::vector<FlowField>& flows,
                      const WeightScheme& scheme);

// Sliding-window stabilization: frame t gets the combination of
// {t-n+1, ..., t}. Warm-up frames (t < n-1) use a truncated window with the
// leading weights renormalized, keeping the progression shape.
std::vector<FlowField> stabilize_stream(const std::vector<FlowField>& stream,
                                        const WeightScheme& scheme);

// Parameter-space analog: weighted mean of coefficients and centers.
// Throws MonotonicityViolation when the combined params fail the guard.
DistortionParams combine_params(const std::vector<FrameEstimate>& estimates,
                                const WeightScheme& scheme);

// Sliding-window form of combine_params, same warm-up handling as
// stabilize_stream.
std::vector<DistortionParams> stabilize_param_stream(
    const std::vector<FrameEstimate>& stream, const WeightScheme& scheme);

}  // namespace fvc
