#include "fvc/dual_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fvc/errors.hpp"
#include "fvc/nelder_mead.hpp"

namespace fvc {

FlowField delta_m(const FlowField& mf, const FlowField& mn,
                  const FlowField& w) {
  if (!mf.same_shape(mn) || !mf.same_shape(w)) {
    throw DimensionMismatch("delta_m: field shapes differ");
  }
  FlowField out(w.width, w.height);
  for (int y = 0; y < w.height; ++y) {
    for (int x = 0; x < w.width; ++x) {
      if (!w.valid.at(x, y) || !mn.valid.at(x, y)) {
        out.valid.set(x, y, false);
        continue;
      }
      const PixelCoord pd = PixelCoord(x, y) + w.at(x, y);
      PixelCoord mf_at_pd;
      if (!sample_flow_bilinear(mf, pd, &mf_at_pd)) {
        out.valid.set(x, y, false);
        continue;
      }
      const PixelCoord mn_here = mn.at(x, y);
      out.set(x, y, mf_at_pd.x - mn_here.x, mf_at_pd.y - mn_here.y);
    }
  }
  return out;
}

namespace {

// Solves pu' + W(pu') = target. Plain fixed-point iteration diverges where
// the field amplifies displacements (|dW| >= 1, common toward the frame
// border for strong barrel models), so the update is damped: the step is
// halved until the residual actually shrinks.
bool invert_correspondence(const FlowField& w, const PixelCoord& target,
                           const PixelCoord& guess, PixelCoord* out) {
  PixelCoord p = guess;
  PixelCoord wp;
  if (!sample_flow_bilinear(w, p, &wp)) return false;
  PixelCoord r = target - (p + wp);
  for (int it = 0; it < 60 && r.norm() >= 1e-9; ++it) {
    double lam = 1.0;
    bool improved = false;
    for (int k = 0; k < 16; ++k, lam *= 0.5) {
      const PixelCoord q = p + r * lam;
      PixelCoord wq;
      if (!sample_flow_bilinear(w, q, &wq)) continue;
      const PixelCoord rq = target - (q + wq);
      if (rq.norm() < r.norm()) {
        p = q;
        r = rq;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (r.norm() > 1e-4) return false;  // no pre-image inside the valid field
  *out = p;
  return true;
}

}  // namespace

FlowField delta_w(const FlowField& w, const FlowField& mf) {
  if (!w.same_shape(mf)) {
    throw DimensionMismatch("delta_w: field shapes differ");
  }
  FlowField out(w.width, w.height);
  for (int y = 0; y < w.height; ++y) {
    for (int x = 0; x < w.width; ++x) {
      if (!w.valid.at(x, y)) {
        out.valid.set(x, y, false);
        continue;
      }
      const PixelCoord pu(x, y);
      const PixelCoord w_here = w.at(x, y);
      const PixelCoord pd = pu + w_here;
      PixelCoord mf_at_pd;
      if (!sample_flow_bilinear(mf, pd, &mf_at_pd)) {
        out.valid.set(x, y, false);
        continue;
      }
      // Fisheye point moves to pd + Mf; transport that motion onto the
      // corrected grid through the W correspondence.
      const PixelCoord target = pd + mf_at_pd;
      PixelCoord pu_moved;
      if (!invert_correspondence(w, target, pu + mf_at_pd, &pu_moved)) {
        out.valid.set(x, y, false);
        continue;
      }
      PixelCoord w_moved;
      if (!sample_flow_bilinear(w, pu_moved, &w_moved)) {
        out.valid.set(x, y, false);
        continue;
      }
      out.set(x, y, w_moved.x - w_here.x, w_moved.y - w_here.y);
    }
  }
  return out;
}

DeformationResidual deformation_residual(const FlowField& w,
                                         const FlowField& mf,
                                         const FlowField& mn) {
  const FlowField dm = delta_m(mf, mn, w);
  const FlowField dw = delta_w(w, mf);
  DeformationResidual res;
  res.residual = FlowField(w.width, w.height);
  double wsum = 0.0, wmag = 0.0;
  const double huber_delta = 1.0;
  for (std::size_t i = 0; i < res.residual.u.size(); ++i) {
    if (!dm.valid.valid[i] || !dw.valid.valid[i]) {
      res.residual.valid.valid[i] = 0;
      continue;
    }
    const double ru = double(dm.u[i]) - dw.u[i];
    const double rv = double(dm.v[i]) - dw.v[i];
    res.residual.u[i] = float(ru);
    res.residual.v[i] = float(rv);
    const double mag = std::hypot(ru, rv);
    const double wgt = mag <= huber_delta ? 1.0 : huber_delta / mag;
    wsum += wgt;
    wmag += wgt * mag;
  }
  if (wsum == 0.0) {
    throw EmptyValidRegion("deformation_residual: no valid pixels");
  }
  res.summary = wmag / wsum;
  return res;
}

namespace {

// Robust constant fit of a flow field: per-component median over valid
// pixels. The residual identity assumes the distortion-free scene motion is
// a rigid translation, so the corrected-domain flow is reduced to that model
// before the residual is formed. Re-using the raw estimate instead would
// close the identity for *any* invertible W (it is a change of variables)
// and leave nothing to minimize.
bool fit_translation(const FlowField& f, PixelCoord* t) {
  std::vector<float> us, vs;
  us.reserve(f.u.size());
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    if (!f.valid.valid[i]) continue;
    us.push_back(f.u[i]);
    vs.push_back(f.v[i]);
  }
  if (us.size() < 64) return false;
  const auto mid = us.size() / 2;
  std::nth_element(us.begin(), us.begin() + mid, us.end());
  std::nth_element(vs.begin(), vs.begin() + mid, vs.end());
  *t = PixelCoord(us[mid], vs[mid]);
  return true;
}

double window_objective(const DistortionParams& params,
                        const std::vector<Frame>& fisheye_window,
                        const std::vector<FlowField>& fisheye_flows,
                        const FlowConfig& flow_cfg) {
  const int w = fisheye_window.front().width;
  const int h = fisheye_window.front().height;

  double need = 0.0;
  for (double cx : {0.0, double(w - 1)}) {
    for (double cy : {0.0, double(h - 1)}) {
      need = std::max(need, (PixelCoord(cx, cy) - params.center).norm());
    }
  }
  if (valid_radius(params) < 0.75 * need / params.norm_radius) {
    return std::numeric_limits<double>::infinity();
  }

  const FlowField field = intra_frame_flow(params, w, h);
  std::vector<Frame> corrected;
  corrected.reserve(fisheye_window.size());
  for (const auto& f : fisheye_window) {
    corrected.push_back(warp_backward(f, field).first);
  }

  // Fixed central evaluation disc, independent of the candidate: pixels a
  // candidate cannot explain contribute the Huber saturation value instead
  // of silently leaving the average. Otherwise an over-strong model could
  // shrink the valid region to the benign center and fake a low residual.
  const double disc_r2 = 0.48 * std::min(w, h) * 0.48 * std::min(w, h);
  const double huber_delta = 1.0;

  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i + 1 < corrected.size(); ++i) {
    const FlowField mn =
        estimate_flow(corrected[i], corrected[i + 1], flow_cfg);
    PixelCoord t;
    if (!fit_translation(mn, &t)) {
      return std::numeric_limits<double>::infinity();
    }
    FlowField rigid(w, h);
    for (std::size_t j = 0; j < rigid.u.size(); ++j) {
      rigid.u[j] = float(t.x);
      rigid.v[j] = float(t.y);
    }
    try {
      const auto res = deformation_residual(field, fisheye_flows[i], rigid);
      double wsum = 0.0, wmag = 0.0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double dx = x - params.center.x, dy = y - params.center.y;
          if (dx * dx + dy * dy > disc_r2) continue;
          // Pixels the fisheye-flow estimator could not track carry no
          // information about any candidate; skip rather than penalize.
          if (!fisheye_flows[i].valid.at(x, y)) continue;
          if (!res.residual.valid.at(x, y)) {
            // Distinguish why: sampling Mf at the correspondence can fail on
            // estimator speckle (not the candidate's fault — skip), whereas
            // a hole in W itself or a failed transport is.
            PixelCoord mf_at_pd;
            if (field.valid.at(x, y) &&
                !sample_flow_bilinear(fisheye_flows[i],
                                      PixelCoord(x, y) + field.at(x, y),
                                      &mf_at_pd)) {
              continue;
            }
            wsum += 1.0;
            wmag += huber_delta;
            continue;
          }
          const PixelCoord r = res.residual.at(x, y);
          const double mag = std::hypot(r.x, r.y);
          const double wgt = mag <= huber_delta ? 1.0 : huber_delta / mag;
          wsum += wgt;
          wmag += wgt * mag;
        }
      }
      if (wsum == 0.0) return std::numeric_limits<double>::infinity();
      sum += wmag / wsum;
      ++pairs;
    } catch (const EmptyValidRegion&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  if (pairs == 0) return std::numeric_limits<double>::infinity();
  return sum / pairs;
}

}  // namespace

double refine_objective(const DistortionParams& params,
                        const std::vector<Frame>& fisheye_window,
                        const std::vector<FlowField>& fisheye_flows,
                        const FlowConfig& flow_cfg) {
  return window_objective(params, fisheye_window, fisheye_flows, flow_cfg);
}

RefineReport refine_params(const DistortionParams& init,
                           const std::vector<Frame>& fisheye_window,
                           const FlowConfig& flow_cfg) {
  if (fisheye_window.size() < 2) {
    throw LengthMismatch("refine_params: window needs at least 2 frames");
  }

  // Inter-frame fisheye flows do not depend on the candidate params.
  std::vector<FlowField> fisheye_flows;
  for (std::size_t i = 0; i + 1 < fisheye_window.size(); ++i) {
    fisheye_flows.push_back(
        estimate_flow(fisheye_window[i], fisheye_window[i + 1], flow_cfg));
  }

  // Static windows carry no deformation signal: both sides of the identity
  // vanish for any W.
  double motion = 0.0;
  std::size_t motion_n = 0;
  for (const auto& f : fisheye_flows) {
    for (std::size_t i = 0; i < f.u.size(); ++i) {
      if (!f.valid.valid[i]) continue;
      motion += std::hypot(double(f.u[i]), double(f.v[i]));
      ++motion_n;
    }
  }
  RefineReport report;
  report.params = init;
  if (motion_n == 0 || motion / double(motion_n) < 0.05) {
    return report;  // NoProgress
  }

  double best = std::numeric_limits<double>::infinity();
  DistortionParams best_params = init;
  auto objective = [&](const std::vector<double>& x) {
    DistortionParams p = init;
    p.k1 = x[0];
    p.k2 = x[1];
    p.k3 = x[2];
    const double v = window_objective(p, fisheye_window, fisheye_flows,
                                      flow_cfg);
    if (v < best) {
      best = v;
      best_params = p;
    }
    return v;
  };

  const double init_obj = objective({init.k1, init.k2, init.k3});
  report.init_objective = init_obj;
  if (!std::isfinite(init_obj)) {
    throw EmptyValidRegion("refine_params: objective undefined at init");
  }

  const auto result = nelder_mead(objective, {init.k1, init.k2, init.k3},
                                  {0.02, 0.01, 0.005}, 150, 1e-4);
  report.evaluations = result.evaluations + 1;

  if (best < init_obj - 1e-12) {
    report.params = best_params;
    report.final_objective = best;
    report.progressed = true;
  } else {
    report.params = init;
    report.final_objective = init_obj;
  }
  return report;
}

}  // namespace fvc
