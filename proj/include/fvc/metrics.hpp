#pragma once

#include <string>
#include <vector>

#include "fvc/flow.hpp"
#include "fvc/raster.hpp"

namespace fvc {

// PSNR over masked pixels; identical frames report the 99 dB sentinel so
// downstream CSV stays finite and sortable.
double psnr(const Frame& a, const Frame& b, const ValidityMask& mask);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03,
// L=255, computed on luma. Windows overlapping invalid pixels are skipped.
double ssim(const Frame& a, const Frame& b, const ValidityMask& mask);

// Mean Euclidean endpoint distance over the jointly valid region.
double epe(const FlowField& flow, const FlowField& gt);

// Mean over pixels of the temporal standard deviation (population) of the
// flow vectors, on the jointly valid region.
double jitter_score(const std::vector<FlowField>& flows);

// Per-pair global motion of a corrected video: a least-squares similarity
// transform fitted to the dense flow, plus the anisotropy of a full affine
// fit for the distortion metric.
struct PathSample {
  double tx = 0.0;
  double ty = 0.0;
  double rotation = 0.0;  // rad
  double scale = 1.0;
  double anisotropy = 1.0;  // sigma_min / sigma_max of the affine part
};

struct CameraPath {
  std::vector<PathSample> samples;
};

CameraPath camera_path(const std::vector<Frame>& video,
                       const FlowConfig& flow_cfg);

struct StabilityTriple {
  double cropping = 1.0;
  double distortion = 1.0;
  double stability = 1.0;
};

// cropping: mean min(1, 1/scale); distortion: mean affine anisotropy;
// stability: low-frequency energy ratio (bins 2-6 over all non-DC bins of
// the one-sided spectrum) averaged over the tx, ty and rotation sequences.
// All-zero sequences score 1 by convention. Needs >= 8 samples.
StabilityTriple stability_triple(const CameraPath& path);

struct MetricReport {
  std::string video_id;
  double psnr_db = 0.0;
  double ssim_value = 0.0;
  double epe_px = 0.0;
  double cropping = 0.0;
  double distortion = 0.0;
  double stability = 0.0;
  double jitter_px = 0.0;
  std::size_t frame_count = 0;
  std::size_t valid_pixels = 0;
  std::string config_hash;
};

// CSV with a fixed header matching the MetricReport field order.
std::string metric_csv_header();
std::string metric_csv_row(const MetricReport& r);
std::string metrics_to_json(const std::vector<MetricReport>& reports);

}  // namespace fvc
