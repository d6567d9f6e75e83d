#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fvc/distortion.hpp"
#include "fvc/io.hpp"
#include "fvc/raster.hpp"

namespace fvc {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Coefficient ranges give boundary displacements of roughly 5-60 px on
// 256x256 frames while keeping the model invertible.
struct SamplerConfig {
  Range k1{-0.35, -0.05};
  Range k2{-0.05, 0.05};
  Range k3{-0.01, 0.01};
  double center_jitter = 2.0;  // px
  std::uint64_t seed = 0;
  int n = 5;
  int out_size = 256;

  std::string to_json() const;
  static SamplerConfig from_json(const std::string& text);
};

// Ordered window of n frames sharing one ground-truth DistortionParams.
struct Timestamp {
  std::vector<Frame> frames;
  DistortionParams params;
  std::string source_id;
  std::vector<int> frame_indices;
};

// Uniform draw from the configured ranges, rejection-resampled until the
// monotonicity guard covers the whole frame (<= 100 attempts, then
// SamplingExhausted). Deterministic in (cfg.seed, draw_index).
DistortionParams sample_params(const SamplerConfig& cfg,
                               std::uint64_t draw_index);

struct SynthesizedTimestamp {
  Timestamp ts;
  FlowField gt_flow;
  std::vector<Frame> refs;  // the resized planar frames
};

// Resizes each planar frame to out_size and maps it planar -> fisheye:
// fisheye(pd) = sample_bilinear(planar, undistorted_of(pd)). Returns the
// window, the matching ground-truth intra-frame flow, and the resized
// planar references.
SynthesizedTimestamp synthesize_timestamp(const std::vector<Frame>& planar,
                                          const DistortionParams& params,
                                          int out_w, int out_h);

// Walks the image sequences under source_dir (one subdirectory per
// sequence, frames in filename order), cuts stride-1 overlapping windows of
// cfg.n frames, synthesizes each with freshly sampled params, and writes
// frames (PNG), ground-truth flow (.flo), params (JSON) and a manifest.
// max_timestamps 0 means no limit.
Manifest build_dataset(const std::filesystem::path& source_dir,
                       const SamplerConfig& cfg,
                       const std::filesystem::path& out_dir,
                       std::size_t max_timestamps = 0);

// Procedural planar test footage: multi-octave value noise panned along a
// smooth low-frequency path. Deterministic in the seed.
std::vector<Frame> generate_planar_sequence(std::uint64_t seed, int length,
                                            int width, int height,
                                            double pan_amplitude = 6.0);

// Writes `count` procedural sequences of `length` frames into dir/seq_###/.
void write_planar_sources(const std::filesystem::path& dir, int count,
                          int length, int width, int height,
                          std::uint64_t seed);

}  // namespace fvc
