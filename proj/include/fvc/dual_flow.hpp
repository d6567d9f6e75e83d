#pragma once

#include <vector>

#include "fvc/distortion.hpp"
#include "fvc/flow.hpp"
#include "fvc/raster.hpp"

namespace fvc {

// Per-pixel defect of the dual-flow identity, with a Huber-robust summary.
struct DeformationResidual {
  FlowField residual;   // delta_m - delta_w, validity shared
  double summary = 0.0; // robust mean magnitude, px
};

// Difference of the inter-frame flows through the lens correspondence:
// for corrected-grid pixel pu with fisheye position pd = pu + W(pu),
// delta_m(pu) = Mf(pd) - Mn(pu). Invalid where any operand is.
FlowField delta_m(const FlowField& mf, const FlowField& mn,
                  const FlowField& w);

// Change of the correction field along the motion: the fisheye motion is
// transported onto the corrected grid through the W correspondence (fixed
// point of pu' + W(pu') = pd + Mf(pd)), then
// delta_w(pu) = W(pu + M~(pu)) - W(pu).
FlowField delta_w(const FlowField& w, const FlowField& mf);

// delta_m - delta_w with a Huber-weighted (delta = 1 px) mean magnitude.
// Throws EmptyValidRegion when no pixel survives.
DeformationResidual deformation_residual(const FlowField& w,
                                         const FlowField& mf,
                                         const FlowField& mn);

struct RefineReport {
  DistortionParams params;
  double init_objective = 0.0;
  double final_objective = 0.0;
  int evaluations = 0;
  bool progressed = false;
};

// Nelder-Mead over (k1, k2, k3) minimizing the mean residual summary over
// consecutive frame pairs of the window. Mf per pair is estimated once on
// the fisheye frames; Mn is re-estimated on the corrected frames for every
// candidate. Stops at simplex diameter < 1e-4 or 150 evaluations. Returns
// the best-seen params, never worse than init under the objective; a static
// window (no usable inter-frame motion) returns init unchanged.
RefineReport refine_params(const DistortionParams& init,
                           const std::vector<Frame>& fisheye_window,
                           const FlowConfig& flow_cfg);

// The refinement objective at a single parameter vector (exposed for
// diagnostics and tests).
double refine_objective(const DistortionParams& params,
                        const std::vector<Frame>& fisheye_window,
                        const std::vector<FlowField>& fisheye_flows,
                        const FlowConfig& flow_cfg);

}  // namespace fvc
