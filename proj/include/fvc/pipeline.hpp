#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fvc/flow.hpp"
#include "fvc/metrics.hpp"
#include "fvc/temporal.hpp"

namespace fvc {

enum class EstimatorKind { GroundTruth, OracleNoisy, Photometric };

const char* estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

struct CorrectionOptions {
  EstimatorKind estimator = EstimatorKind::GroundTruth;
  NoiseSigma sigma{0.0, 0.0, 0.0};
  std::uint64_t seed = 0;
  bool stabilize = false;
  int scheme_n = 5;
  double scheme_a1 = 0.3;
  FlowConfig flow_cfg;
  std::string config_hash;
};

// One corrected video: the stability protocol takes the last frame of each
// overlapping timestamp, so consecutive manifest windows of a source form
// consecutive output frames.
struct VideoRun {
  std::string video_id;
  std::vector<std::string> frame_ids;
  std::vector<Frame> corrected;
  std::vector<ValidityMask> masks;
  std::vector<FlowField> raw_flows;      // per-frame W before any TWS
  std::vector<FlowField> applied_flows;  // W' actually used
  std::vector<int> skipped_frames;
  MetricReport report;
};

// Runs the correction pipeline over every video of the dataset. Per-frame
// estimator failures are logged into skipped_frames and the frame dropped.
std::vector<VideoRun> run_correction(
    const std::filesystem::path& manifest_path, const CorrectionOptions& opt);

}  // namespace fvc
