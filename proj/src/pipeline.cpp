#include "fvc/pipeline.hpp"

#include <algorithm>
#include <map>

#include "fvc/dual_flow.hpp"
#include "fvc/errors.hpp"
#include "fvc/io.hpp"
#include "fvc/synthesis.hpp"

namespace fvc {

const char* estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::GroundTruth:
      return "ground-truth";
    case EstimatorKind::OracleNoisy:
      return "oracle-noisy";
    case EstimatorKind::Photometric:
      return "photometric";
  }
  return "?";
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "ground-truth") return EstimatorKind::GroundTruth;
  if (name == "oracle-noisy") return EstimatorKind::OracleNoisy;
  if (name == "photometric") return EstimatorKind::Photometric;
  throw Error("unknown estimator: " + name);
}

std::vector<VideoRun> run_correction(
    const std::filesystem::path& manifest_path, const CorrectionOptions& opt) {
  const Manifest manifest = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();

  // Group windows by source, keeping manifest (window) order.
  std::vector<std::string> video_order;
  std::map<std::string, std::vector<const TimestampRecord*>> videos;
  for (const auto& rec : manifest.timestamps) {
    if (!videos.count(rec.source_id)) video_order.push_back(rec.source_id);
    videos[rec.source_id].push_back(&rec);
  }

  const WeightScheme scheme = make_weights(opt.scheme_n, opt.scheme_a1);

  std::vector<VideoRun> runs;
  for (const auto& vid : video_order) {
    VideoRun run;
    run.video_id = vid;
    run.report.video_id = vid;
    run.report.config_hash = opt.config_hash;

    struct FrameWork {
      Frame fisheye;
      Frame ref;
      FlowField gt_flow;
      DistortionParams gt_params;
      std::string id;
    };
    std::vector<FrameWork> work;
    int frame_index = 0;
    std::vector<FlowField> raw_flows;
    for (const TimestampRecord* rec : videos[vid]) {
      FrameWork fw;
      fw.id = rec->timestamp_id;
      fw.fisheye = read_frame(base / rec->frame_paths.back());
      if (!rec->ref_paths.empty()) {
        fw.ref = read_frame(base / rec->ref_paths.back());
      }
      fw.gt_flow = read_flo(base / rec->flow_path);
      fw.gt_params =
          params_from_json(read_text_file(base / rec->params_path));

      DistortionParams est = fw.gt_params;
      bool ok = true;
      try {
        switch (opt.estimator) {
          case EstimatorKind::GroundTruth:
            break;
          case EstimatorKind::OracleNoisy:
            est = oracle_noisy_estimator(fw.gt_params, opt.sigma, opt.seed,
                                         frame_index)
                      .params;
            break;
          case EstimatorKind::Photometric: {
            if (fw.ref.width == 0) {
              throw Error("photometric estimator needs reference frames");
            }
            DistortionParams init = default_params(fw.fisheye.width,
                                                   fw.fisheye.height);
            init.k1 = -0.2;  // mid-range barrel prior
            const auto fe = photometric_search_estimator(fw.fisheye, fw.ref,
                                                         init, frame_index);
            est = fe.params;
            break;
          }
        }
      } catch (const Error&) {
        ok = false;
      }
      if (ok) {
        raw_flows.push_back(
            intra_frame_flow(est, fw.fisheye.width, fw.fisheye.height));
        work.push_back(std::move(fw));
      } else {
        run.skipped_frames.push_back(frame_index);
      }
      ++frame_index;
    }
    if (work.empty()) {
      runs.push_back(std::move(run));
      continue;
    }

    run.raw_flows = raw_flows;
    run.applied_flows =
        opt.stabilize ? stabilize_stream(raw_flows, scheme) : raw_flows;

    double psnr_sum = 0.0, ssim_sum = 0.0, epe_sum = 0.0;
    std::size_t metric_frames = 0, valid_total = 0;
    for (std::size_t t = 0; t < work.size(); ++t) {
      auto [corrected, mask] =
          warp_backward(work[t].fisheye, run.applied_flows[t]);
      valid_total += mask.count();
      if (work[t].ref.width != 0) {
        try {
          psnr_sum += psnr(corrected, work[t].ref, mask);
          ssim_sum += ssim(corrected, work[t].ref, mask);
          epe_sum += epe(run.applied_flows[t], work[t].gt_flow);
          ++metric_frames;
        } catch (const EmptyValidRegion&) {
        }
      }
      run.frame_ids.push_back(work[t].id);
      run.corrected.push_back(std::move(corrected));
      run.masks.push_back(std::move(mask));
    }
    if (metric_frames > 0) {
      run.report.psnr_db = psnr_sum / double(metric_frames);
      run.report.ssim_value = ssim_sum / double(metric_frames);
      run.report.epe_px = epe_sum / double(metric_frames);
    }
    run.report.frame_count = work.size();
    run.report.valid_pixels = valid_total;

    if (run.applied_flows.size() >= 2) {
      try {
        run.report.jitter_px = jitter_score(run.applied_flows);
      } catch (const EmptyValidRegion&) {
      }
    }
    if (run.corrected.size() >= 9) {
      try {
        const auto triple =
            stability_triple(camera_path(run.corrected, opt.flow_cfg));
        run.report.cropping = triple.cropping;
        run.report.distortion = triple.distortion;
        run.report.stability = triple.stability;
      } catch (const Error&) {
      }
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace fvc
