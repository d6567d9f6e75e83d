#include "fvc/distortion.hpp"

#include <cmath>

#include <json.hpp>

#include "fvc/errors.hpp"

namespace fvc {

namespace {
constexpr double kScanStep = 1e-3;
constexpr double kInvertTol = 1e-12;
constexpr int kInvertMaxIter = 50;
}  // namespace

double radial_scale(double r_norm, const DistortionParams& params) {
  const double r2 = r_norm * r_norm;
  return 1.0 + r2 * (params.k1 + r2 * (params.k2 + r2 * params.k3));
}

double radial_forward(double r_norm, const DistortionParams& params) {
  return r_norm * radial_scale(r_norm, params);
}

double radial_forward_deriv(double r_norm, const DistortionParams& params) {
  const double r2 = r_norm * r_norm;
  return 1.0 +
         r2 * (3.0 * params.k1 + r2 * (5.0 * params.k2 + r2 * 7.0 * params.k3));
}

double valid_radius(const DistortionParams& params) {
  if (radial_forward_deriv(0.0, params) <= 0.0) return 0.0;
  double r = 0.0;
  for (double next = kScanStep; next <= kMaxNormRadius; next += kScanStep) {
    if (radial_forward_deriv(next, params) <= 0.0) return r;
    r = next;
  }
  if (radial_forward_deriv(kMaxNormRadius, params) > 0.0) return kMaxNormRadius;
  return r;
}

PixelCoord undistorted_of(const PixelCoord& pd,
                          const DistortionParams& params) {
  const PixelCoord d = pd - params.center;
  const double r = d.norm() / params.norm_radius;
  return params.center + radial_scale(r, params) * d;
}

namespace {

// Solve g(r) = target on [0, r_hi]; caller guarantees g(r_hi) >= target.
double invert_radius(double target, double r_hi,
                     const DistortionParams& params) {
  double lo = 0.0, hi = r_hi;
  double r = std::min(target, r_hi);
  for (int it = 0; it < kInvertMaxIter; ++it) {
    const double f = radial_forward(r, params) - target;
    if (std::fabs(f) <= kInvertTol) return r;
    if (f > 0.0) {
      hi = r;
    } else {
      lo = r;
    }
    const double df = radial_forward_deriv(r, params);
    double next = df > 1e-12 ? r - f / df : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    r = next;
  }
  throw NoConvergence("distorted_of: radial inversion did not converge");
}

}  // namespace

PixelCoord distorted_of(const PixelCoord& pu, const DistortionParams& params) {
  const PixelCoord d = pu - params.center;
  const double r_u = d.norm() / params.norm_radius;
  if (r_u == 0.0) return params.center;
  const double r_v = valid_radius(params);
  const double g_max = radial_forward(r_v, params);
  if (r_u > g_max + 1e-12) {
    throw NonInvertible("distorted_of: radius outside invertible range");
  }
  const double r_d = invert_radius(std::min(r_u, g_max), r_v, params);
  const double scale = r_d * params.norm_radius / d.norm();
  return params.center + scale * d;
}

std::optional<PixelCoord> try_distorted_of(const PixelCoord& pu,
                                           const DistortionParams& params) {
  try {
    return distorted_of(pu, params);
  } catch (const Error&) {
    return std::nullopt;
  }
}

FlowField intra_frame_flow(const DistortionParams& params, int width,
                           int height) {
  FlowField flow(width, height);
  if (params.identity()) return flow;
  const double r_v = valid_radius(params);
  const double g_max = radial_forward(r_v, params);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const PixelCoord pu(x, y);
      const PixelCoord d = pu - params.center;
      const double r_u = d.norm() / params.norm_radius;
      if (r_u > g_max + 1e-12) {
        flow.valid.set(x, y, false);
        continue;
      }
      if (r_u == 0.0) {
        flow.set(x, y, 0.0, 0.0);
        continue;
      }
      double r_d;
      try {
        r_d = invert_radius(std::min(r_u, g_max), r_v, params);
      } catch (const NoConvergence&) {
        flow.valid.set(x, y, false);
        continue;
      }
      const double scale = r_d * params.norm_radius / d.norm();
      flow.set(x, y, scale * d.x - d.x, scale * d.y - d.y);
    }
  }
  return flow;
}

DistortionParams default_params(int width, int height) {
  DistortionParams p;
  p.center = {0.5 * (width - 1), 0.5 * (height - 1)};
  p.norm_radius = 0.5 * std::hypot(double(width - 1), double(height - 1));
  return p;
}

std::string params_to_json(const DistortionParams& params) {
  nlohmann::json j;
  j["k"] = {params.k1, params.k2, params.k3};
  j["center"] = {params.center.x, params.center.y};
  j["norm_radius"] = params.norm_radius;
  return j.dump(2);
}

DistortionParams params_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DistortionParams p;
  p.k1 = j.at("k").at(0).get<double>();
  p.k2 = j.at("k").at(1).get<double>();
  p.k3 = j.at("k").at(2).get<double>();
  p.center.x = j.at("center").at(0).get<double>();
  p.center.y = j.at("center").at(1).get<double>();
  p.norm_radius = j.at("norm_radius").get<double>();
  if (!(p.norm_radius > 0.0)) {
    throw CorruptFile("params: norm_radius must be positive");
  }
  return p;
}

}  // namespace fvc
