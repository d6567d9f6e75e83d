#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fvc/dual_flow.hpp"
#include "fvc/errors.hpp"
#include "fvc/io.hpp"
#include "fvc/metrics.hpp"
#include "fvc/pipeline.hpp"
#include "fvc/plot.hpp"
#include "fvc/synthesis.hpp"
#include "fvc/temporal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int default_threads() {
  if (const char* env = std::getenv("FVL_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 1;
}

// Flat JSON config; flags given on the command line win. Unknown keys are
// hard errors so typos never pass silently.
json load_config(const std::string& path, const std::set<std::string>& known) {
  if (path.empty()) return json::object();
  json j;
  try {
    j = json::parse(fvc::read_text_file(path));
  } catch (const json::exception& e) {
    throw fvc::Error(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw fvc::Error("config: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw fvc::Error("config: unknown key " + key);
  }
  return j;
}

template <typename T>
void apply(const json& cfg, const char* key, T& value) {
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

struct FlowFlags {
  int levels = 4;
  int window = 7;
  int iterations = 5;
  double smoothing = 1.0;

  void attach(CLI::App* app) {
    app->add_option("--flow-levels", levels, "Flow pyramid levels");
    app->add_option("--flow-window", window, "Flow window size (odd)");
    app->add_option("--flow-iterations", iterations, "Flow iterations/level");
    app->add_option("--flow-smoothing", smoothing, "Flow pre-smoothing sigma");
  }
  void from_config(const json& cfg) {
    apply(cfg, "flow_levels", levels);
    apply(cfg, "flow_window", window);
    apply(cfg, "flow_iterations", iterations);
    apply(cfg, "flow_smoothing", smoothing);
  }
  fvc::FlowConfig build() const {
    fvc::FlowConfig c;
    c.pyramid_levels = levels;
    c.window = window;
    c.iterations = iterations;
    c.smoothing_sigma = smoothing;
    if (c.pyramid_levels < 1 || c.window < 3 || c.window % 2 == 0) {
      throw fvc::Error("invalid flow configuration");
    }
    return c;
  }
  json to_json() const {
    return {{"flow_levels", levels},
            {"flow_window", window},
            {"flow_iterations", iterations},
            {"flow_smoothing", smoothing}};
  }
};

void write_resolved_config(const fs::path& out_dir, const json& resolved) {
  fs::create_directories(out_dir);
  fvc::write_text_file(out_dir / "config.json", resolved.dump(2) + "\n");
}

void write_run_csv(const fs::path& path,
                   const std::vector<fvc::MetricReport>& reports) {
  std::string csv = fvc::metric_csv_header() + "\n";
  for (const auto& r : reports) csv += fvc::metric_csv_row(r) + "\n";
  fvc::write_text_file(path, csv);
}

std::vector<double> frame_jitter_series(
    const std::vector<fvc::FlowField>& flows) {
  std::vector<double> out;
  for (std::size_t t = 1; t < flows.size(); ++t) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < flows[t].u.size(); ++i) {
      if (!flows[t].valid.valid[i] || !flows[t - 1].valid.valid[i]) continue;
      sum += std::hypot(double(flows[t].u[i]) - flows[t - 1].u[i],
                        double(flows[t].v[i]) - flows[t - 1].v[i]);
      ++n;
    }
    out.push_back(n ? sum / double(n) : 0.0);
  }
  return out;
}

// ---- synth ----

int cmd_synth(const std::string& config_path, const std::string& src,
              const std::string& out, std::uint64_t seed, std::size_t count,
              int n, int size, double center_jitter,
              std::vector<double> k1, std::vector<double> k2,
              std::vector<double> k3, int procedural, int seq_length) {
  fvc::SamplerConfig cfg;
  cfg.seed = seed;
  cfg.n = n;
  cfg.out_size = size;
  cfg.center_jitter = center_jitter;
  if (k1.size() == 2) cfg.k1 = {k1[0], k1[1]};
  if (k2.size() == 2) cfg.k2 = {k2[0], k2[1]};
  if (k3.size() == 2) cfg.k3 = {k3[0], k3[1]};

  if (procedural > 0) {
    fvc::write_planar_sources(src, procedural, seq_length, size, size, seed);
  }
  const auto manifest = fvc::build_dataset(src, cfg, out, count);

  json resolved = json::parse(cfg.to_json());
  resolved["src"] = src;
  resolved["out"] = out;
  resolved["count"] = count;
  resolved["procedural"] = procedural;
  resolved["seq_length"] = seq_length;
  resolved["config_file"] = config_path;
  resolved["config_hash"] = fnv1a_hex(resolved.dump());
  write_resolved_config(out, resolved);

  std::cout << "wrote " << manifest.timestamps.size() << " timestamps to "
            << out << "\n";
  return 0;
}

// ---- correct / bench shared ----

void write_video_outputs(const fs::path& out_dir, const fvc::VideoRun& run) {
  const fs::path vdir = out_dir / run.video_id;
  fs::create_directories(vdir);
  for (std::size_t t = 0; t < run.corrected.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "corr_%03zu.png", t);
    fvc::write_frame(run.corrected[t], vdir / name);
    std::snprintf(name, sizeof(name), "flow_%03zu.flo", t);
    fvc::write_flo(run.applied_flows[t], vdir / name);
  }
}

int cmd_correct(const fvc::CorrectionOptions& opt,
                const std::string& manifest, const std::string& out,
                const json& resolved) {
  const auto runs = fvc::run_correction(manifest, opt);
  write_resolved_config(out, resolved);
  std::vector<fvc::MetricReport> reports;
  for (const auto& run : runs) {
    write_video_outputs(out, run);
    reports.push_back(run.report);
    for (int t : run.skipped_frames) {
      std::cerr << "warning: " << run.video_id << " frame " << t
                << " skipped (estimator failure)\n";
    }
  }
  write_run_csv(fs::path(out) / "report.csv", reports);
  fvc::write_text_file(fs::path(out) / "report.json",
                       fvc::metrics_to_json(reports) + "\n");
  std::cout << "corrected " << runs.size() << " videos into " << out << "\n";
  return 0;
}

// ---- dualflow ----

int cmd_dualflow(const std::string& manifest_path, const std::string& out,
                 double perturb_k1, bool refine, std::size_t limit,
                 const fvc::FlowConfig& flow_cfg, const json& resolved) {
  const fvc::Manifest manifest = fvc::read_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  write_resolved_config(out, resolved);

  std::string csv =
      "timestamp,summary,gt_k1,init_k1,recovered_k1,k1_error,init_objective,"
      "final_objective\n";
  std::size_t done = 0;
  for (const auto& rec : manifest.timestamps) {
    if (limit && done >= limit) break;
    ++done;
    std::vector<fvc::Frame> window;
    for (const auto& p : rec.frame_paths) {
      window.push_back(fvc::read_frame(base / p));
    }
    const auto gt =
        fvc::params_from_json(fvc::read_text_file(base / rec.params_path));
    fvc::DistortionParams init = gt;
    init.k1 += perturb_k1;

    const fvc::FlowField w =
        fvc::intra_frame_flow(init, window[0].width, window[0].height);
    std::vector<fvc::FlowField> mf;
    std::vector<fvc::Frame> corrected;
    for (const auto& f : window) {
      corrected.push_back(fvc::warp_backward(f, w).first);
    }
    double summary = 0.0;
    int pairs = 0;
    fvc::FlowField first_residual;
    for (std::size_t i = 0; i + 1 < window.size(); ++i) {
      const auto mfi = fvc::estimate_flow(window[i], window[i + 1], flow_cfg);
      const auto mni =
          fvc::estimate_flow(corrected[i], corrected[i + 1], flow_cfg);
      const auto res = fvc::deformation_residual(w, mfi, mni);
      if (i == 0) first_residual = res.residual;
      summary += res.summary;
      ++pairs;
      mf.push_back(mfi);
    }
    summary /= pairs;

    const fs::path tdir = fs::path(out) / rec.timestamp_id;
    fs::create_directories(tdir);
    fvc::write_flo(first_residual, tdir / "residual.flo");
    fvc::write_frame(fvc::render_flow_magnitude(first_residual, 2.0),
                     tdir / "residual.png");

    char row[256];
    if (refine) {
      const auto report = fvc::refine_params(init, window, flow_cfg);
      std::snprintf(row, sizeof(row),
                    "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                    rec.timestamp_id.c_str(), summary, gt.k1, init.k1,
                    report.params.k1, std::fabs(report.params.k1 - gt.k1),
                    report.init_objective, report.final_objective);
    } else {
      std::snprintf(row, sizeof(row), "%s,%.6f,%.6f,%.6f,,,,\n",
                    rec.timestamp_id.c_str(), summary, gt.k1, init.k1);
    }
    csv += row;
  }
  fvc::write_text_file(fs::path(out) / "summaries.csv", csv);
  std::cout << "analyzed " << done << " timestamps into " << out << "\n";
  return 0;
}

// ---- bench ----

int cmd_bench(const std::string& manifest, const std::string& out,
              const std::vector<std::string>& estimators, double sigma,
              std::uint64_t seed, int scheme_n, double scheme_a1,
              const fvc::FlowConfig& flow_cfg, int threads,
              const json& resolved) {
  write_resolved_config(out, resolved);
  const std::string hash = resolved.at("config_hash").get<std::string>();

  struct Cell {
    fvc::CorrectionOptions opt;
    std::string label;
  };
  std::vector<Cell> cells;
  for (const auto& est : estimators) {
    for (bool stab : {false, true}) {
      fvc::CorrectionOptions opt;
      opt.estimator = fvc::estimator_from_name(est);
      opt.sigma = {sigma, 0.0, 0.0};
      opt.seed = seed;
      opt.stabilize = stab;
      opt.scheme_n = scheme_n;
      opt.scheme_a1 = scheme_a1;
      opt.flow_cfg = flow_cfg;
      opt.config_hash = hash;
      cells.push_back({opt, est + (stab ? "/tws" : "/raw")});
    }
  }

  std::vector<std::vector<fvc::VideoRun>> results(cells.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      results[i] = fvc::run_correction(manifest, cells[i].opt);
    }
  } else {
    for (std::size_t start = 0; start < cells.size();
         start += std::size_t(threads)) {
      std::vector<std::future<std::vector<fvc::VideoRun>>> futs;
      for (std::size_t i = start;
           i < std::min(cells.size(), start + std::size_t(threads)); ++i) {
        futs.push_back(std::async(std::launch::async, [&, i] {
          return fvc::run_correction(manifest, cells[i].opt);
        }));
      }
      for (std::size_t i = 0; i < futs.size(); ++i) {
        results[start + i] = futs[i].get();
      }
    }
  }

  std::vector<fvc::MetricReport> reports;
  std::map<std::string, std::vector<fvc::PlotSeries>> jitter_plots;
  std::vector<fvc::PlotSeries> stability_series;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    fvc::PlotSeries stab_row{cells[i].label, {}};
    for (const auto& run : results[i]) {
      fvc::MetricReport r = run.report;
      r.video_id = run.video_id + "/" + cells[i].label;
      reports.push_back(r);
      jitter_plots[run.video_id].push_back(
          {cells[i].label, frame_jitter_series(run.applied_flows)});
      stab_row.values.push_back(run.report.stability);
    }
    stability_series.push_back(std::move(stab_row));
  }

  write_run_csv(fs::path(out) / "bench.csv", reports);
  fvc::write_text_file(fs::path(out) / "bench.json",
                       fvc::metrics_to_json(reports) + "\n");
  for (const auto& [vid, series] : jitter_plots) {
    fvc::write_frame(fvc::render_line_chart(series, 640, 360),
                     fs::path(out) / ("jitter_" + vid + ".png"));
  }
  fvc::write_frame(fvc::render_line_chart(stability_series, 640, 360),
                   fs::path(out) / "stability.png");
  std::cout << "benchmark grid (" << cells.size() << " cells) written to "
            << out << "\n";
  return 0;
}

// ---- flow / stabilize / eval ----

int cmd_flow(const std::string& a_path, const std::string& b_path,
             const std::string& out, const std::string& gt_path,
             const fvc::FlowConfig& cfg) {
  const auto a = fvc::read_frame(a_path);
  const auto b = fvc::read_frame(b_path);
  const auto flow = fvc::estimate_flow(a, b, cfg);
  fvc::write_flo(flow, out);
  if (!gt_path.empty()) {
    std::cout << "epe " << fvc::epe(flow, fvc::read_flo(gt_path)) << "\n";
  }
  return 0;
}

int cmd_stabilize(const std::string& in_dir, const std::string& out_dir,
                  int n, double a1) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".flo") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw fvc::EmptySource("stabilize: no .flo in " + in_dir);
  std::vector<fvc::FlowField> stream;
  for (const auto& f : files) stream.push_back(fvc::read_flo(f));
  const auto stabilized =
      fvc::stabilize_stream(stream, fvc::make_weights(n, a1));
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < stabilized.size(); ++i) {
    fvc::write_flo(stabilized[i], fs::path(out_dir) / files[i].filename());
  }
  std::cout << "stabilized " << stabilized.size() << " fields into "
            << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& a_dir, const std::string& b_dir,
             const std::string& out) {
  std::map<std::string, fs::path> a_files;
  for (const auto& e : fs::directory_iterator(a_dir)) {
    if (e.is_regular_file()) a_files[e.path().filename().string()] = e.path();
  }
  std::string csv = "file,psnr,ssim\n";
  double psnr_sum = 0, ssim_sum = 0;
  int count = 0;
  std::vector<std::string> names;
  for (const auto& [name, _] : a_files) names.push_back(name);
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    const fs::path bp = fs::path(b_dir) / name;
    if (!fs::exists(bp)) continue;
    const auto fa = fvc::read_frame(a_files[name]);
    const auto fb = fvc::read_frame(bp);
    const fvc::ValidityMask mask(fa.width, fa.height, true);
    const double p = fvc::psnr(fa, fb, mask);
    const double s = fvc::ssim(fa, fb, mask);
    char row[160];
    std::snprintf(row, sizeof(row), "%s,%.4f,%.6f\n", name.c_str(), p, s);
    csv += row;
    psnr_sum += p;
    ssim_sum += s;
    ++count;
  }
  if (count == 0) throw fvc::EmptySource("eval: no matching files");
  char row[160];
  std::snprintf(row, sizeof(row), "mean,%.4f,%.6f\n", psnr_sum / count,
                ssim_sum / count);
  csv += row;
  if (out.empty()) {
    std::cout << csv;
  } else {
    fvc::write_text_file(out, csv);
  }
  return 0;
}

// Per-subcommand option state, shared between the config loader and the
// CLI11 callbacks.
struct SynthState {
  std::string src, out;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  int n = 5, size = 256, procedural = 0, seq_length = 16;
  double center_jitter = 2.0;
  std::vector<double> k1, k2, k3;
};

struct CorrectState {
  std::string manifest, out, estimator = "ground-truth";
  double sigma = 0.0, a1 = 0.3;
  std::uint64_t seed = 0;
  bool stabilize = false;
  int n = 5;
  FlowFlags flow;
};

struct DualState {
  std::string manifest, out;
  double perturb_k1 = 0.0;
  bool refine = false;
  std::size_t limit = 0;
  FlowFlags flow;
};

struct FlowState {
  std::string a, b, out, gt;
  FlowFlags flow;
};

struct StabState {
  std::string in, out;
  int n = 5;
  double a1 = 0.3;
};

struct EvalState {
  std::string a, b, out;
};

struct BenchState {
  std::string manifest, out;
  std::vector<std::string> estimators{"oracle-noisy", "photometric"};
  double sigma = 0.02, a1 = 0.3;
  std::uint64_t seed = 0;
  int n = 5;
  FlowFlags flow;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisheye video synthesis, correction and stability toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = default_threads();
  app.add_option("--config", config_path, "JSON config file (flags override)");
  app.add_option("--threads", threads, "Worker threads (env FVL_THREADS)");

  // Pre-scan so the config can seed defaults before the real parse.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  }

  int rc = 0;
  auto guard = [&rc](auto&& fn) {
    try {
      rc = fn();
    } catch (const fvc::IoFailure& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = kExitIo;
    } catch (const fvc::EmptySource& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = kExitIo;
    } catch (const fvc::CorruptFile& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = kExitIo;
    } catch (const fvc::TruncatedFile& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = kExitIo;
    } catch (const fvc::BadMagic& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = kExitIo;
    } catch (const fvc::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      rc = kExitConfig;
    }
  };

  // synth
  {
    auto* sub = app.add_subcommand("synth", "Generate a fisheye dataset");
    auto st = std::make_shared<SynthState>();
    try {
      const json cfg = load_config(
          config_path, {"src", "out", "seed", "count", "n", "size",
                        "center_jitter", "k1", "k2", "k3", "procedural",
                        "seq_length"});
      apply(cfg, "src", st->src);
      apply(cfg, "out", st->out);
      apply(cfg, "seed", st->seed);
      apply(cfg, "count", st->count);
      apply(cfg, "n", st->n);
      apply(cfg, "size", st->size);
      apply(cfg, "center_jitter", st->center_jitter);
      apply(cfg, "k1", st->k1);
      apply(cfg, "k2", st->k2);
      apply(cfg, "k3", st->k3);
      apply(cfg, "procedural", st->procedural);
      apply(cfg, "seq_length", st->seq_length);
    } catch (const fvc::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    sub->add_option("--src", st->src, "Directory of planar image sequences")
        ->required(st->src.empty());
    sub->add_option("--out", st->out, "Output dataset directory")
        ->required(st->out.empty());
    sub->add_option("--seed", st->seed, "Sampler seed");
    sub->add_option("--count", st->count, "Max timestamps (0 = all)");
    sub->add_option("--n", st->n, "Frames per timestamp");
    sub->add_option("--size", st->size, "Output frame size (square)");
    sub->add_option("--center-jitter", st->center_jitter,
                    "Distortion center jitter (px)");
    sub->add_option("--k1", st->k1, "k1 range lo hi")->expected(2);
    sub->add_option("--k2", st->k2, "k2 range lo hi")->expected(2);
    sub->add_option("--k3", st->k3, "k3 range lo hi")->expected(2);
    sub->add_option("--procedural", st->procedural,
                    "Generate this many procedural source sequences first");
    sub->add_option("--seq-length", st->seq_length,
                    "Frames per procedural sequence");
    sub->callback([&, st] {
      guard([&] {
        return cmd_synth(config_path, st->src, st->out, st->seed, st->count,
                         st->n, st->size, st->center_jitter, st->k1, st->k2,
                         st->k3, st->procedural, st->seq_length);
      });
    });
  }

  // correct
  {
    auto* sub = app.add_subcommand("correct", "Correct a fisheye dataset");
    auto st = std::make_shared<CorrectState>();
    try {
      const json cfg = load_config(
          config_path,
          {"manifest", "out", "estimator", "sigma", "seed", "stabilize", "n",
           "a1", "flow_levels", "flow_window", "flow_iterations",
           "flow_smoothing"});
      apply(cfg, "manifest", st->manifest);
      apply(cfg, "out", st->out);
      apply(cfg, "estimator", st->estimator);
      apply(cfg, "sigma", st->sigma);
      apply(cfg, "seed", st->seed);
      apply(cfg, "stabilize", st->stabilize);
      apply(cfg, "n", st->n);
      apply(cfg, "a1", st->a1);
      st->flow.from_config(cfg);
    } catch (const fvc::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    sub->add_option("--manifest", st->manifest, "Dataset manifest.json")
        ->required(st->manifest.empty());
    sub->add_option("--out", st->out, "Run output directory")
        ->required(st->out.empty());
    sub->add_option("--estimator", st->estimator,
                    "ground-truth | oracle-noisy | photometric");
    sub->add_option("--sigma", st->sigma, "k1 noise sigma (oracle-noisy)");
    sub->add_option("--seed", st->seed, "Estimator seed");
    sub->add_flag("--stabilize", st->stabilize, "Apply the TWS stream");
    sub->add_option("--n", st->n, "TWS window length");
    sub->add_option("--a1", st->a1, "TWS first (largest) weight");
    st->flow.attach(sub);
    sub->callback([&, st] {
      guard([&] {
        fvc::CorrectionOptions opt;
        opt.estimator = fvc::estimator_from_name(st->estimator);
        opt.sigma = {st->sigma, 0.0, 0.0};
        opt.seed = st->seed;
        opt.stabilize = st->stabilize;
        opt.scheme_n = st->n;
        opt.scheme_a1 = st->a1;
        opt.flow_cfg = st->flow.build();
        json resolved = st->flow.to_json();
        resolved["manifest"] = st->manifest;
        resolved["out"] = st->out;
        resolved["estimator"] = st->estimator;
        resolved["sigma"] = st->sigma;
        resolved["seed"] = st->seed;
        resolved["stabilize"] = st->stabilize;
        resolved["n"] = st->n;
        resolved["a1"] = st->a1;
        resolved["config_hash"] = fnv1a_hex(resolved.dump());
        opt.config_hash = resolved["config_hash"];
        return cmd_correct(opt, st->manifest, st->out, resolved);
      });
    });
  }

  // dualflow
  {
    auto* sub =
        app.add_subcommand("dualflow", "Deformation residual analysis");
    auto st = std::make_shared<DualState>();
    try {
      const json cfg = load_config(
          config_path,
          {"manifest", "out", "perturb_k1", "refine", "limit", "flow_levels",
           "flow_window", "flow_iterations", "flow_smoothing"});
      apply(cfg, "manifest", st->manifest);
      apply(cfg, "out", st->out);
      apply(cfg, "perturb_k1", st->perturb_k1);
      apply(cfg, "refine", st->refine);
      apply(cfg, "limit", st->limit);
      st->flow.from_config(cfg);
    } catch (const fvc::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    sub->add_option("--manifest", st->manifest, "Dataset manifest.json")
        ->required(st->manifest.empty());
    sub->add_option("--out", st->out, "Run output directory")
        ->required(st->out.empty());
    sub->add_option("--perturb-k1", st->perturb_k1,
                    "Offset added to ground-truth k1 before analysis");
    sub->add_flag("--refine", st->refine, "Run residual-minimizing refinement");
    sub->add_option("--limit", st->limit, "Max timestamps (0 = all)");
    st->flow.attach(sub);
    sub->callback([&, st] {
      guard([&] {
        json resolved = st->flow.to_json();
        resolved["manifest"] = st->manifest;
        resolved["out"] = st->out;
        resolved["perturb_k1"] = st->perturb_k1;
        resolved["refine"] = st->refine;
        resolved["limit"] = st->limit;
        resolved["config_hash"] = fnv1a_hex(resolved.dump());
        return cmd_dualflow(st->manifest, st->out, st->perturb_k1, st->refine,
                            st->limit, st->flow.build(), resolved);
      });
    });
  }

  // flow
  {
    auto* sub = app.add_subcommand("flow", "Dense flow between two frames");
    auto st = std::make_shared<FlowState>();
    sub->add_option("--a", st->a, "First frame")->required();
    sub->add_option("--b", st->b, "Second frame")->required();
    sub->add_option("--out", st->out, "Output .flo path")->required();
    sub->add_option("--gt", st->gt, "Optional ground-truth .flo for EPE");
    st->flow.attach(sub);
    sub->callback([&, st] {
      guard([&] {
        return cmd_flow(st->a, st->b, st->out, st->gt, st->flow.build());
      });
    });
  }

  // stabilize
  {
    auto* sub = app.add_subcommand("stabilize", "Apply TWS to a .flo stream");
    auto st = std::make_shared<StabState>();
    sub->add_option("--in", st->in, "Directory of .flo fields")->required();
    sub->add_option("--out", st->out, "Output directory")->required();
    sub->add_option("--n", st->n, "Window length");
    sub->add_option("--a1", st->a1, "First (largest) weight");
    sub->callback([&, st] {
      guard([&] { return cmd_stabilize(st->in, st->out, st->n, st->a1); });
    });
  }

  // eval
  {
    auto* sub = app.add_subcommand("eval", "PSNR/SSIM between two frame dirs");
    auto st = std::make_shared<EvalState>();
    sub->add_option("--a", st->a, "First directory")->required();
    sub->add_option("--b", st->b, "Second directory")->required();
    sub->add_option("--out", st->out, "CSV output (default stdout)");
    sub->callback(
        [&, st] { guard([&] { return cmd_eval(st->a, st->b, st->out); }); });
  }

  // bench
  {
    auto* sub = app.add_subcommand("bench", "Estimator x TWS benchmark grid");
    auto st = std::make_shared<BenchState>();
    try {
      const json cfg = load_config(
          config_path,
          {"manifest", "out", "estimators", "sigma", "seed", "n", "a1",
           "flow_levels", "flow_window", "flow_iterations", "flow_smoothing"});
      apply(cfg, "manifest", st->manifest);
      apply(cfg, "out", st->out);
      apply(cfg, "estimators", st->estimators);
      apply(cfg, "sigma", st->sigma);
      apply(cfg, "seed", st->seed);
      apply(cfg, "n", st->n);
      apply(cfg, "a1", st->a1);
      st->flow.from_config(cfg);
    } catch (const fvc::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    sub->add_option("--manifest", st->manifest, "Dataset manifest.json")
        ->required(st->manifest.empty());
    sub->add_option("--out", st->out, "Run output directory")
        ->required(st->out.empty());
    sub->add_option("--estimators", st->estimators,
                    "Estimators to benchmark");
    sub->add_option("--sigma", st->sigma, "k1 noise sigma (oracle-noisy)");
    sub->add_option("--seed", st->seed, "Estimator seed");
    sub->add_option("--n", st->n, "TWS window length");
    sub->add_option("--a1", st->a1, "TWS first (largest) weight");
    st->flow.attach(sub);
    sub->callback([&, st] {
      guard([&] {
        json resolved = st->flow.to_json();
        resolved["manifest"] = st->manifest;
        resolved["out"] = st->out;
        resolved["estimators"] = st->estimators;
        resolved["sigma"] = st->sigma;
        resolved["seed"] = st->seed;
        resolved["n"] = st->n;
        resolved["a1"] = st->a1;
        resolved["threads"] = threads;
        resolved["config_hash"] = fnv1a_hex(resolved.dump());
        return cmd_bench(st->manifest, st->out, st->estimators, st->sigma,
                         st->seed, st->n, st->a1, st->flow.build(), threads,
                         resolved);
      });
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  return rc;
}
