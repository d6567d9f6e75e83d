#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fvc/geometry.hpp"

namespace fvc {

// 8-bit raster, row-major, 1 (gray) or 3 (RGB) interleaved channels.
struct Frame {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Frame() = default;
  Frame(int w, int h, int c, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  bool same_shape(const Frame& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

struct ValidityMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> valid;  // 0 or 1

  ValidityMask() = default;
  ValidityMask(int w, int h, bool v = true)
      : width(w), height(h), valid(static_cast<std::size_t>(w) * h, v ? 1 : 0) {}

  bool at(int x, int y) const {
    return valid[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool v) {
    valid[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const;
};

// Dense per-pixel displacement map (pixels) with a validity mask.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;
  std::vector<float> v;
  ValidityMask valid;

  FlowField() = default;
  FlowField(int w, int h);

  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  PixelCoord at(int x, int y) const {
    return {u[idx(x, y)], v[idx(x, y)]};
  }
  void set(int x, int y, double fu, double fv) {
    u[idx(x, y)] = static_cast<float>(fu);
    v[idx(x, y)] = static_cast<float>(fv);
  }
  bool same_shape(const FlowField& o) const {
    return width == o.width && height == o.height;
  }
};

struct SampleResult {
  std::array<double, 3> value{0.0, 0.0, 0.0};
  bool in_bounds = false;
};

// Round-half-away-from-zero quantization to [0,255].
std::uint8_t quantize(double v);

// Bilinear interpolation of the four neighbors; in_bounds is false when the
// sample point leaves [0, w-1] x [0, h-1], in which case the value is 0.
SampleResult sample_bilinear(const Frame& frame, const PixelCoord& p);

// Bilinear sample of a flow field; false when out of range or any
// contributing pixel is invalid.
bool sample_flow_bilinear(const FlowField& flow, const PixelCoord& p,
                          PixelCoord* out);

// out(p) = sample_bilinear(frame, p + flow(p)); mask false where the flow is
// invalid or the sample leaves the frame, with the output pixel set to 0.
std::pair<Frame, ValidityMask> warp_backward(const Frame& frame,
                                             const FlowField& flow);

// Corner-aligned bilinear resize.
Frame resize_bilinear(const Frame& frame, int w, int h);

// Rec. 601 luma as doubles in [0,255]; identity for grayscale input.
std::vector<double> to_luma(const Frame& frame);

}  // namespace fvc
