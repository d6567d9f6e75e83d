#include "fvc/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fvc/errors.hpp"

namespace fvc {

Frame::Frame(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c),
      data(static_cast<std::size_t>(w) * h * c, fill) {}

std::size_t ValidityMask::count() const {
  return static_cast<std::size_t>(
      std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

FlowField::FlowField(int w, int h)
    : width(w), height(h),
      u(static_cast<std::size_t>(w) * h, 0.0f),
      v(static_cast<std::size_t>(w) * h, 0.0f),
      valid(w, h, true) {}

std::uint8_t quantize(double v) {
  long r = std::lround(v);
  return static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
}

SampleResult sample_bilinear(const Frame& frame, const PixelCoord& p) {
  SampleResult res;
  const int w = frame.width, h = frame.height;
  if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= w - 1.0 && p.y <= h - 1.0)) {
    return res;
  }
  int x0 = static_cast<int>(std::floor(p.x));
  int y0 = static_cast<int>(std::floor(p.y));
  // Exact right/bottom edge: fold the zero-weight neighbor inward.
  x0 = std::min(x0, w - 2 < 0 ? 0 : w - 2);
  y0 = std::min(y0, h - 2 < 0 ? 0 : h - 2);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = p.x - x0;
  const double fy = p.y - y0;
  for (int c = 0; c < frame.channels; ++c) {
    const double v00 = frame.at(x0, y0, c), v10 = frame.at(x1, y0, c);
    const double v01 = frame.at(x0, y1, c), v11 = frame.at(x1, y1, c);
    res.value[c] = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) +
                   fy * ((1.0 - fx) * v01 + fx * v11);
  }
  res.in_bounds = true;
  return res;
}

bool sample_flow_bilinear(const FlowField& flow, const PixelCoord& p,
                          PixelCoord* out) {
  const int w = flow.width, h = flow.height;
  if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= w - 1.0 && p.y <= h - 1.0)) {
    return false;
  }
  int x0 = static_cast<int>(std::floor(p.x));
  int y0 = static_cast<int>(std::floor(p.y));
  x0 = std::min(x0, w - 2 < 0 ? 0 : w - 2);
  y0 = std::min(y0, h - 2 < 0 ? 0 : h - 2);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = p.x - x0;
  const double fy = p.y - y0;
  // Only neighbors that actually contribute weight must be valid.
  const auto ok = [&](double wgt, int xx, int yy) {
    return wgt <= 0.0 || flow.valid.at(xx, yy);
  };
  if (!ok((1 - fx) * (1 - fy), x0, y0) || !ok(fx * (1 - fy), x1, y0) ||
      !ok((1 - fx) * fy, x0, y1) || !ok(fx * fy, x1, y1)) {
    return false;
  }
  auto lerp2 = [&](const std::vector<float>& c) {
    return (1.0 - fy) * ((1.0 - fx) * c[flow.idx(x0, y0)] +
                         fx * c[flow.idx(x1, y0)]) +
           fy * ((1.0 - fx) * c[flow.idx(x0, y1)] + fx * c[flow.idx(x1, y1)]);
  };
  out->x = lerp2(flow.u);
  out->y = lerp2(flow.v);
  return true;
}

std::pair<Frame, ValidityMask> warp_backward(const Frame& frame,
                                             const FlowField& flow) {
  if (flow.width != frame.width || flow.height != frame.height) {
    throw DimensionMismatch("warp_backward: flow and frame shapes differ");
  }
  Frame out(frame.width, frame.height, frame.channels, 0);
  ValidityMask mask(frame.width, frame.height, false);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!flow.valid.at(x, y)) continue;
      const PixelCoord src = PixelCoord(x, y) + flow.at(x, y);
      const SampleResult s = sample_bilinear(frame, src);
      if (!s.in_bounds) continue;
      for (int c = 0; c < frame.channels; ++c) {
        out.at(x, y, c) = quantize(s.value[c]);
      }
      mask.set(x, y, true);
    }
  }
  return {std::move(out), std::move(mask)};
}

Frame resize_bilinear(const Frame& frame, int w, int h) {
  if (w == frame.width && h == frame.height) return frame;
  Frame out(w, h, frame.channels, 0);
  const double sx = w > 1 ? double(frame.width - 1) / (w - 1) : 0.0;
  const double sy = h > 1 ? double(frame.height - 1) / (h - 1) : 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const SampleResult s = sample_bilinear(frame, {x * sx, y * sy});
      for (int c = 0; c < frame.channels; ++c) {
        out.at(x, y, c) = quantize(s.value[c]);
      }
    }
  }
  return out;
}

std::vector<double> to_luma(const Frame& frame) {
  std::vector<double> luma(frame.pixel_count());
  if (frame.channels == 1) {
    for (std::size_t i = 0; i < luma.size(); ++i) luma[i] = frame.data[i];
  } else {
    for (std::size_t i = 0; i < luma.size(); ++i) {
      luma[i] = 0.299 * frame.data[3 * i] + 0.587 * frame.data[3 * i + 1] +
                0.114 * frame.data[3 * i + 2];
    }
  }
  return luma;
}

}  // namespace fvc
