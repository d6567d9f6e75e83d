// Acceptance harness: one pass/fail line per criterion, non-zero exit when
// anything fails. Heavier end-to-end checks build small procedural datasets
// in a temp directory; the CLI determinism check shells out to the built
// binary (FVC_CLI_PATH).

#include <unistd.h>
#include <cstdarg>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fvc/dual_flow.hpp"
#include "fvc/errors.hpp"
#include "fvc/io.hpp"
#include "fvc/metrics.hpp"
#include "fvc/pipeline.hpp"
#include "fvc/rng.hpp"
#include "fvc/synthesis.hpp"
#include "fvc/temporal.hpp"

namespace fs = std::filesystem;
using namespace fvc;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %s — %s\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void run(const std::string& name,
         const std::function<std::pair<bool, std::string>()>& fn) {
  try {
    const auto [ok, detail] = fn();
    report(name, ok, detail);
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// ---- criterion 1 ----

std::pair<bool, std::string> round_trip() {
  SamplerConfig cfg;
  cfg.seed = 20240817;
  Rng rng(99);
  double worst = 0.0;
  for (int set = 0; set < 100; ++set) {
    const DistortionParams p = sample_params(cfg, set);
    const double reach = radial_forward(valid_radius(p), p);
    for (int i = 0; i < 1000; ++i) {
      const double rho = 0.98 * reach * std::sqrt(rng.next_double());
      const double th = rng.uniform(0.0, 2.0 * M_PI);
      const PixelCoord pu{p.center.x + rho * p.norm_radius * std::cos(th),
                          p.center.y + rho * p.norm_radius * std::sin(th)};
      const PixelCoord pd = distorted_of(pu, p);
      const PixelCoord back = undistorted_of(pd, p);
      worst = std::max(worst, (back - pu).norm());
    }
  }
  return {worst <= 1e-6, fmt("max round-trip error %.3e px over 100k points "
                             "(limit 1e-6)", worst)};
}

// ---- shared dataset builders ----

fs::path temp_root() {
  const fs::path root =
      fs::temp_directory_path() /
      ("fvc_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  return root;
}

// Two sources x 40 frames -> 36 overlapping windows each, 72 timestamps.
// Long streams matter for the stability spectrum: with short paths the
// low band (bins 2-6) degenerates and the score cannot separate runs.
fs::path build_benchmark(const fs::path& root) {
  const fs::path src = root / "src_a";
  const fs::path out = root / "data_a";
  write_planar_sources(src, 2, 40, 256, 256, 404);
  SamplerConfig cfg;
  cfg.seed = 505;
  build_dataset(src, cfg, out);
  return out / "manifest.json";
}

// One 128 px source with 5 windows: small enough for repeated refinement.
fs::path build_refine_set(const fs::path& root) {
  const fs::path src = root / "src_b";
  const fs::path out = root / "data_b";
  write_planar_sources(src, 1, 9, 128, 128, 606);
  SamplerConfig cfg;
  cfg.seed = 707;
  cfg.out_size = 128;
  build_dataset(src, cfg, out);
  return out / "manifest.json";
}

// ---- criterion 2 ----

std::pair<bool, std::string> synthesis_correction_identity(
    const fs::path& manifest) {
  CorrectionOptions opt;
  opt.estimator = EstimatorKind::GroundTruth;
  const auto runs = run_correction(manifest, opt);
  double min_psnr = 1e9, min_ssim = 1e9;
  std::size_t timestamps = 0;
  for (const auto& r : runs) {
    min_psnr = std::min(min_psnr, r.report.psnr_db);
    min_ssim = std::min(min_ssim, r.report.ssim_value);
    timestamps += r.report.frame_count;
  }
  const bool ok = timestamps >= 20 && min_psnr >= 35.0 && min_ssim >= 0.95;
  return {ok, fmt("%zu timestamps, worst video PSNR %.2f dB (>= 35), worst "
                  "SSIM %.4f (>= 0.95)", timestamps, min_psnr, min_ssim)};
}

// ---- criterion 3 ----

std::pair<bool, std::string> tws_exactness() {
  const WeightScheme s = make_weights(5, 0.3);
  const double expect[5] = {0.3, 0.25, 0.2, 0.15, 0.1};
  bool exact = true;
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    exact = exact && s.weights[i] == expect[i];
    sum += s.weights[i];
  }
  const bool sum_ok = std::abs(sum - 1.0) < 1e-12;

  Rng rng(2024);
  std::vector<FlowField> flows;
  for (int t = 0; t < 5; ++t) {
    FlowField f(128, 128);
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x) f.set(x, y, rng.normal(), rng.normal());
    flows.push_back(std::move(f));
  }
  const FlowField out = tws_combine(flows, s);
  double sq = 0.0;
  for (std::size_t i = 0; i < out.u.size(); ++i)
    sq += out.u[i] * out.u[i] + out.v[i] * out.v[i];
  const double atten = std::sqrt(sq / (2.0 * out.u.size()));
  const double target = std::sqrt(0.225);
  const bool atten_ok = std::abs(atten - target) / target <= 0.03;

  return {exact && sum_ok && atten_ok,
          fmt("weights %s, sum err %.1e, attenuation %.4f vs %.4f (within "
              "3%%: %s)", exact ? "bitwise exact" : "NOT exact",
              std::abs(sum - 1.0), atten, target, atten_ok ? "yes" : "no")};
}

// ---- criterion 4 ----

std::pair<bool, std::string> jitter_reduction(const fs::path& manifest) {
  CorrectionOptions raw;
  raw.estimator = EstimatorKind::OracleNoisy;
  raw.sigma = {0.02, 0.0, 0.0};
  raw.seed = 321;
  CorrectionOptions stab = raw;
  stab.stabilize = true;

  const auto runs_raw = run_correction(manifest, raw);
  const auto runs_stab = run_correction(manifest, stab);
  bool ok = runs_raw.size() == runs_stab.size() && !runs_raw.empty();
  double worst_ratio = 0.0;
  std::string stab_note;
  for (std::size_t i = 0; ok && i < runs_raw.size(); ++i) {
    const double jr = runs_raw[i].report.jitter_px;
    const double js = runs_stab[i].report.jitter_px;
    const double ratio = jr > 0 ? js / jr : 1.0;
    worst_ratio = std::max(worst_ratio, ratio);
    if (ratio > 0.55) ok = false;
    if (!(runs_stab[i].report.stability > runs_raw[i].report.stability)) {
      ok = false;
      stab_note = fmt("; stability not improved on %s (%.4f vs %.4f)",
                      runs_raw[i].video_id.c_str(),
                      runs_stab[i].report.stability,
                      runs_raw[i].report.stability);
    }
  }
  return {ok, fmt("worst jitter ratio %.3f (limit 0.55), stability higher on "
                  "all %zu videos%s", worst_ratio, runs_raw.size(),
                  stab_note.c_str())};
}

// ---- criterion 5 ----

std::pair<bool, std::string> flow_difference_identity(const fs::path& manifest) {
  // Analytic translating scene. 512 px with a moderate barrel keeps the
  // grid-interpolation defect of the identity comfortably under 1e-3 px.
  const int n = 512;
  DistortionParams p = default_params(n, n);
  p.k1 = -0.18;
  p.k2 = 0.01;
  const FlowField w = intra_frame_flow(p, n, n);
  FlowField mf(n, n), mn(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      mn.set(x, y, 2.0, -1.5);
      const PixelCoord pu = undistorted_of({double(x), double(y)}, p);
      const auto moved = try_distorted_of({pu.x + 2.0, pu.y - 1.5}, p);
      if (moved) {
        mf.set(x, y, moved->x - x, moved->y - y);
      } else {
        mf.valid.set(x, y, false);
      }
    }
  }
  const FlowField dm = delta_m(mf, mn, w);
  const FlowField dw = delta_w(w, mf);
  double analytic_max = 0.0;
  for (std::size_t i = 0; i < dm.u.size(); ++i) {
    if (!dm.valid.valid[i] || !dw.valid.valid[i]) continue;
    analytic_max = std::max(analytic_max,
                            std::hypot(double(dm.u[i]) - dw.u[i],
                                       double(dm.v[i]) - dw.v[i]));
  }

  // Estimated flows on one synthesized timestamp.
  const Manifest m = read_manifest(manifest);
  const fs::path base = manifest.parent_path();
  const auto& rec = m.timestamps.front();
  const Frame f0 = read_frame(base / rec.frame_paths[0]);
  const Frame f1 = read_frame(base / rec.frame_paths[1]);
  const DistortionParams gt =
      params_from_json(read_text_file(base / rec.params_path));
  const FlowField w_gt = intra_frame_flow(gt, f0.width, f0.height);
  const Frame c0 = warp_backward(f0, w_gt).first;
  const Frame c1 = warp_backward(f1, w_gt).first;
  const FlowConfig cfg;
  const FlowField mf_est = estimate_flow(f0, f1, cfg);
  const FlowField mn_est = estimate_flow(c0, c1, cfg);
  const double est_summary =
      deformation_residual(w_gt, mf_est, mn_est).summary;

  const bool ok = analytic_max <= 1e-3 && est_summary <= 0.5;
  return {ok, fmt("analytic max defect %.2e px (limit 1e-3), estimated "
                  "residual %.3f px (limit 0.5)", analytic_max, est_summary)};
}

// ---- criterion 6 ----

std::pair<bool, std::string> refinement_recovery(const fs::path& manifest) {
  const Manifest m = read_manifest(manifest);
  const fs::path base = manifest.parent_path();
  int recovered = 0, total = 0;
  bool descent = true;
  double worst_err = 0.0;
  for (const auto& rec : m.timestamps) {
    std::vector<Frame> window;
    for (const auto& fp : rec.frame_paths) window.push_back(read_frame(base / fp));
    const DistortionParams gt =
        params_from_json(read_text_file(base / rec.params_path));
    DistortionParams init = gt;
    init.k1 += 0.05;
    const RefineReport rep = refine_params(init, window, FlowConfig{});
    if (rep.progressed && rep.final_objective > rep.init_objective) {
      descent = false;
    }
    const double err = std::abs(rep.params.k1 - gt.k1);
    worst_err = std::max(worst_err, err);
    if (err <= 0.015) ++recovered;
    ++total;
  }
  const bool ok = total > 0 && descent &&
                  double(recovered) / total >= 0.8;
  return {ok, fmt("k1 within 0.015 on %d/%d windows (worst err %.4f), "
                  "objective monotone: %s", recovered, total, worst_err,
                  descent ? "yes" : "no")};
}

// ---- criterion 7 ----

std::pair<bool, std::string> flow_sanity() {
  const Frame canvas = generate_planar_sequence(31, 1, 160, 160, 0.0).front();
  auto crop = [&](int ox, int oy) {
    Frame f(96, 96, 1);
    for (int y = 0; y < 96; ++y)
      for (int x = 0; x < 96; ++x) f.at(x, y) = canvas.at(x + ox, y + oy);
    return f;
  };
  // b's crop origin moves left by 3, so a's content tracks to p + (3, 0).
  const Frame a = crop(20, 20), b = crop(17, 20);
  const FlowConfig cfg;
  const FlowField fwd = estimate_flow(a, b, cfg);
  FlowField gt(96, 96);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) gt.set(x, y, 3.0, 0.0);
  const double shift_epe = epe(fwd, gt);

  const FlowField bwd = estimate_flow(b, a, cfg);
  double anti = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < fwd.u.size(); ++i) {
    if (!fwd.valid.valid[i] || !bwd.valid.valid[i]) continue;
    anti += std::hypot(double(fwd.u[i]) + bwd.u[i],
                       double(fwd.v[i]) + bwd.v[i]);
    ++n;
  }
  anti /= std::max<std::size_t>(n, 1);
  const bool ok = shift_epe <= 0.3 && anti <= 0.3;
  return {ok, fmt("(3,0)-shift EPE %.3f px (limit 0.3), anti-symmetry "
                  "deviation %.3f px (limit 0.3)", shift_epe, anti)};
}

// ---- criterion 8 ----

std::pair<bool, std::string> format_round_trips(const fs::path& root) {
  const fs::path dir = root / "formats";
  fs::create_directories(dir);
  Rng rng(777);
  for (int i = 0; i < 100; ++i) {
    const int w = 1 + int(rng.next_u64() % 24);
    const int h = 1 + int(rng.next_u64() % 24);
    FlowField f(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        f.set(x, y, rng.uniform(-50, 50), rng.uniform(-50, 50));
        if (rng.next_double() < 0.1) f.valid.set(x, y, false);
      }
    }
    write_flo(f, dir / "t.flo");
    const FlowField g = read_flo(dir / "t.flo");
    for (std::size_t k = 0; k < f.u.size(); ++k) {
      if (g.valid.valid[k] != f.valid.valid[k]) {
        return {false, fmt("flo mask mismatch on field %d", i)};
      }
      if (!f.valid.valid[k]) continue;
      if (g.u[k] != f.u[k] || g.v[k] != f.v[k]) {
        return {false, fmt("flo float mismatch on field %d", i)};
      }
    }

    const int ch = (i % 2) ? 3 : 1;
    Frame fr(w, h, ch);
    for (auto& px : fr.data) px = std::uint8_t(rng.next_u64() % 256);
    write_frame(fr, dir / "t.png");
    if (read_frame(dir / "t.png").data != fr.data) {
      return {false, fmt("png byte mismatch on frame %d", i)};
    }
    const fs::path pnm = dir / (ch == 1 ? "t.pgm" : "t.ppm");
    write_frame(fr, pnm);
    if (read_frame(pnm).data != fr.data) {
      return {false, fmt("pnm byte mismatch on frame %d", i)};
    }
  }
  return {true, "100 .flo fields and 100 PNG/PNM frames round-tripped "
                "exactly, sentinels included"};
}

// ---- criterion 9 ----

bool run_cli(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + FVC_CLI_PATH +
                          "' " + args + " > cli.log 2>&1";
  return std::system(cmd.c_str()) == 0;
}

bool trees_identical(const fs::path& a, const fs::path& b, std::string* why) {
  std::map<fs::path, fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) fa[fs::relative(e.path(), a)] = e.path();
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) fb[fs::relative(e.path(), b)] = e.path();
  }
  if (fa.size() != fb.size()) {
    *why = fmt("file count %zu vs %zu", fa.size(), fb.size());
    return false;
  }
  for (const auto& [rel, pa] : fa) {
    const auto it = fb.find(rel);
    if (it == fb.end()) {
      *why = "missing " + rel.string();
      return false;
    }
    if (read_text_file(pa) != read_text_file(it->second)) {
      *why = "content differs: " + rel.string();
      return false;
    }
  }
  return true;
}

std::pair<bool, std::string> determinism(const fs::path& root) {
  const std::string synth_args =
      "synth --procedural 1 --seq-length 7 --size 128 --seed 12 "
      "--src sources --out dataset";
  for (const char* runname : {"run1", "run2"}) {
    fs::create_directories(root / runname);
    if (!run_cli(root / runname, synth_args)) {
      return {false, std::string("cmd_synth failed in ") + runname};
    }
  }
  std::string why;
  if (!trees_identical(root / "run1" / "dataset", root / "run2" / "dataset",
                       &why)) {
    return {false, "cmd_synth trees differ: " + why};
  }

  const std::string bench_args =
      "bench --manifest dataset/manifest.json --out bench "
      "--estimators oracle-noisy --sigma 0.02 --seed 5";
  for (const char* runname : {"run1", "run2"}) {
    if (!run_cli(root / runname, bench_args)) {
      return {false, std::string("cmd_bench failed in ") + runname};
    }
  }
  if (!trees_identical(root / "run1" / "bench", root / "run2" / "bench",
                       &why)) {
    return {false, "cmd_bench trees differ: " + why};
  }
  return {true, "cmd_synth and cmd_bench produced byte-identical trees "
                "across repeated runs"};
}

}  // namespace

int main() {
  const fs::path root = temp_root();
  fs::path manifest_a, manifest_b;

  run("1. model round-trip", round_trip);

  try {
    manifest_a = build_benchmark(root);
    manifest_b = build_refine_set(root);
  } catch (const std::exception& e) {
    report("dataset construction", false, e.what());
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }

  run("2. synthesis-correction identity",
      [&] { return synthesis_correction_identity(manifest_a); });
  run("3. temporal weighting exactness", tws_exactness);
  run("4. jitter reduction", [&] { return jitter_reduction(manifest_a); });
  run("5. flow-difference identity", [&] { return flow_difference_identity(manifest_a); });
  run("6. refinement recovery",
      [&] { return refinement_recovery(manifest_b); });
  run("7. flow estimator sanity", flow_sanity);
  run("8. format round-trips", [&] { return format_round_trips(root); });
  run("9. determinism", [&] { return determinism(root); });

  std::error_code ec;
  fs::remove_all(root, ec);
  if (g_failures == 0) {
    std::printf("all 9 criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
