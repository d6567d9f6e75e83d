#include "fvc/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "fvc/errors.hpp"
#include "fvc/rng.hpp"

namespace fvc {

std::string SamplerConfig::to_json() const {
  nlohmann::json j;
  j["k1"] = {k1.lo, k1.hi};
  j["k2"] = {k2.lo, k2.hi};
  j["k3"] = {k3.lo, k3.hi};
  j["center_jitter"] = center_jitter;
  j["seed"] = seed;
  j["n"] = n;
  j["out_size"] = out_size;
  return j.dump(2);
}

SamplerConfig SamplerConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SamplerConfig c;
  auto range = [&](const char* key, Range dflt) {
    if (!j.contains(key)) return dflt;
    return Range{j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>()};
  };
  c.k1 = range("k1", c.k1);
  c.k2 = range("k2", c.k2);
  c.k3 = range("k3", c.k3);
  c.center_jitter = j.value("center_jitter", c.center_jitter);
  c.seed = j.value("seed", c.seed);
  c.n = j.value("n", c.n);
  c.out_size = j.value("out_size", c.out_size);
  return c;
}

DistortionParams sample_params(const SamplerConfig& cfg,
                               std::uint64_t draw_index) {
  Rng rng(cfg.seed, draw_index);
  const int size = cfg.out_size;
  for (int attempt = 0; attempt < 100; ++attempt) {
    DistortionParams p = default_params(size, size);
    p.k1 = rng.uniform(cfg.k1.lo, cfg.k1.hi);
    p.k2 = rng.uniform(cfg.k2.lo, cfg.k2.hi);
    p.k3 = rng.uniform(cfg.k3.lo, cfg.k3.hi);
    p.center.x += rng.uniform(-cfg.center_jitter, cfg.center_jitter);
    p.center.y += rng.uniform(-cfg.center_jitter, cfg.center_jitter);
    // The guard must cover the farthest frame corner from the center.
    double need = 0.0;
    for (double cx : {0.0, double(size - 1)}) {
      for (double cy : {0.0, double(size - 1)}) {
        need = std::max(need, (PixelCoord(cx, cy) - p.center).norm());
      }
    }
    if (valid_radius(p) >= need / p.norm_radius) return p;
  }
  throw SamplingExhausted("sample_params: 100 rejections, degenerate ranges");
}

SynthesizedTimestamp synthesize_timestamp(const std::vector<Frame>& planar,
                                          const DistortionParams& params,
                                          int out_w, int out_h) {
  if (planar.empty()) throw EmptySource("synthesize_timestamp: no frames");
  for (const auto& f : planar) {
    if (f.width != planar.front().width || f.height != planar.front().height ||
        f.channels != planar.front().channels) {
      throw DimensionMismatch("synthesize_timestamp: mixed frame shapes");
    }
  }
  SynthesizedTimestamp out;
  out.ts.params = params;
  for (const auto& src : planar) {
    Frame resized = resize_bilinear(src, out_w, out_h);
    Frame fish(out_w, out_h, resized.channels, 0);
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        const PixelCoord pu = undistorted_of({double(x), double(y)}, params);
        const SampleResult s = sample_bilinear(resized, pu);
        if (!s.in_bounds) continue;
        for (int c = 0; c < fish.channels; ++c) {
          fish.at(x, y, c) = quantize(s.value[c]);
        }
      }
    }
    out.ts.frames.push_back(std::move(fish));
    out.refs.push_back(std::move(resized));
  }
  out.gt_flow = intra_frame_flow(params, out_w, out_h);
  return out;
}

namespace {

std::vector<std::filesystem::path> sorted_entries(
    const std::filesystem::path& dir, bool dirs) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (dirs ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_image(const std::filesystem::path& p) {
  const std::string e = p.extension().string();
  return e == ".png" || e == ".pgm" || e == ".ppm";
}

}  // namespace

Manifest build_dataset(const std::filesystem::path& source_dir,
                       const SamplerConfig& cfg,
                       const std::filesystem::path& out_dir,
                       std::size_t max_timestamps) {
  if (!std::filesystem::is_directory(source_dir)) {
    throw EmptySource("build_dataset: no such directory " +
                      source_dir.string());
  }
  auto seq_dirs = sorted_entries(source_dir, true);
  if (seq_dirs.empty()) {
    throw EmptySource("build_dataset: no sequences under " +
                      source_dir.string());
  }
  std::filesystem::create_directories(out_dir);

  Manifest manifest;
  manifest.dataset_id = source_dir.filename().string();
  manifest.generator_config = cfg.to_json();
  std::uint64_t draw_index = 0;
  bool any_window = false;

  for (const auto& seq_dir : seq_dirs) {
    std::vector<std::filesystem::path> files;
    for (const auto& p : sorted_entries(seq_dir, false)) {
      if (is_image(p)) files.push_back(p);
    }
    if (static_cast<int>(files.size()) < cfg.n) continue;
    std::vector<Frame> frames;
    frames.reserve(files.size());
    for (const auto& p : files) frames.push_back(read_frame(p));
    const std::string source_id = seq_dir.filename().string();
    // One lens per video: every window of a source shares the same params,
    // so stream-level variation comes from estimators, not the dataset.
    const DistortionParams params = sample_params(cfg, draw_index++);

    for (std::size_t start = 0; start + cfg.n <= frames.size(); ++start) {
      if (max_timestamps && manifest.timestamps.size() >= max_timestamps) break;
      any_window = true;
      std::vector<Frame> window(frames.begin() + start,
                                frames.begin() + start + cfg.n);
      auto synth =
          synthesize_timestamp(window, params, cfg.out_size, cfg.out_size);

      char idbuf[64];
      std::snprintf(idbuf, sizeof(idbuf), "%s_w%04zu", source_id.c_str(),
                    start);
      const std::string tid = idbuf;
      const std::filesystem::path tdir = out_dir / tid;
      std::filesystem::create_directories(tdir);

      TimestampRecord rec;
      rec.timestamp_id = tid;
      rec.source_id = source_id;
      for (int i = 0; i < cfg.n; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%02d.png", i);
        write_frame(synth.ts.frames[i], tdir / name);
        rec.frame_paths.push_back(tid + "/" + name);
        std::snprintf(name, sizeof(name), "ref_%02d.png", i);
        write_frame(synth.refs[i], tdir / name);
        rec.ref_paths.push_back(tid + "/" + name);
      }
      write_flo(synth.gt_flow, tdir / "flow.flo");
      rec.flow_path = tid + "/flow.flo";
      write_text_file(tdir / "params.json", params_to_json(params) + "\n");
      rec.params_path = tid + "/params.json";
      manifest.timestamps.push_back(std::move(rec));
    }
    if (max_timestamps && manifest.timestamps.size() >= max_timestamps) break;
  }

  if (!any_window) {
    throw EmptySource("build_dataset: no sequence has at least n frames");
  }
  write_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

namespace {

// Single octave of value noise: a coarse random grid sampled bilinearly.
std::vector<double> value_noise(Rng& rng, int w, int h, int cell) {
  const int gw = w / cell + 2, gh = h / cell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
  for (auto& g : grid) g = rng.next_double();
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const double gy = double(y) / cell;
    const int y0 = static_cast<int>(gy);
    const double fy = gy - y0;
    for (int x = 0; x < w; ++x) {
      const double gx = double(x) / cell;
      const int x0 = static_cast<int>(gx);
      const double fx = gx - x0;
      const double v00 = grid[y0 * gw + x0], v10 = grid[y0 * gw + x0 + 1];
      const double v01 = grid[(y0 + 1) * gw + x0],
                   v11 = grid[(y0 + 1) * gw + x0 + 1];
      out[y * static_cast<std::size_t>(w) + x] =
          (1 - fy) * ((1 - fx) * v00 + fx * v10) +
          fy * ((1 - fx) * v01 + fx * v11);
    }
  }
  return out;
}

}  // namespace

std::vector<Frame> generate_planar_sequence(std::uint64_t seed, int length,
                                            int width, int height,
                                            double pan_amplitude) {
  Rng rng(seed, 0x70616e);
  const int margin = static_cast<int>(std::ceil(pan_amplitude)) + 4;
  const int cw = width + 2 * margin, ch = height + 2 * margin;

  // Three octaves keep the texture band-limited enough to survive two
  // bilinear resamplings yet rich enough for local flow estimation.
  std::vector<double> canvas(static_cast<std::size_t>(cw) * ch, 0.0);
  const int cells[] = {6, 16, 48};
  const double weights[] = {0.35, 0.4, 0.25};
  for (int o = 0; o < 3; ++o) {
    const auto octave = value_noise(rng, cw, ch, cells[o]);
    for (std::size_t i = 0; i < canvas.size(); ++i) {
      canvas[i] += weights[o] * octave[i];
    }
  }
  const auto [mn, mx] = std::minmax_element(canvas.begin(), canvas.end());
  const double span = *mx - *mn > 1e-12 ? *mx - *mn : 1.0;

  Frame canvas_frame(cw, ch, 1, 0);
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    canvas_frame.data[i] = quantize(10.0 + 235.0 * (canvas[i] - *mn) / span);
  }

  const double phase_x = rng.uniform(0.0, 6.283185307179586);
  const double phase_y = rng.uniform(0.0, 6.283185307179586);
  const double period = std::max(8.0, 2.0 * length);

  std::vector<Frame> frames;
  frames.reserve(length);
  for (int t = 0; t < length; ++t) {
    const double ox =
        margin + pan_amplitude * std::sin(6.283185307179586 * t / period +
                                          phase_x);
    const double oy =
        margin + pan_amplitude * std::sin(6.283185307179586 * t / period +
                                          phase_y);
    Frame f(width, height, 1, 0);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const SampleResult s =
            sample_bilinear(canvas_frame, {x + ox, y + oy});
        f.at(x, y) = quantize(s.value[0]);
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_planar_sources(const std::filesystem::path& dir, int count,
                          int length, int width, int height,
                          std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (int s = 0; s < count; ++s) {
    char name[32];
    std::snprintf(name, sizeof(name), "seq_%03d", s);
    const std::filesystem::path seq_dir = dir / name;
    std::filesystem::create_directories(seq_dir);
    const auto frames =
        generate_planar_sequence(seed + static_cast<std::uint64_t>(s) * 1000,
                                 length, width, height);
    for (int t = 0; t < length; ++t) {
      char fname[32];
      std::snprintf(fname, sizeof(fname), "frame_%03d.png", t);
      write_frame(frames[t], seq_dir / fname);
    }
  }
}

}  // namespace fvc
