#include "fvc/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "fvc/errors.hpp"
#include "fvc/rng.hpp"

namespace fvc {

std::string FlowConfig::to_json() const {
  nlohmann::json j;
  j["pyramid_levels"] = pyramid_levels;
  j["window"] = window;
  j["iterations"] = iterations;
  j["smoothing_sigma"] = smoothing_sigma;
  return j.dump(2);
}

FlowConfig FlowConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  FlowConfig c;
  c.pyramid_levels = j.value("pyramid_levels", c.pyramid_levels);
  c.window = j.value("window", c.window);
  c.iterations = j.value("iterations", c.iterations);
  c.smoothing_sigma = j.value("smoothing_sigma", c.smoothing_sigma);
  return c;
}

namespace {

constexpr double kEigenThreshold = 1e-4 * 255.0 * 255.0;

struct Image {
  int w = 0, h = 0;
  std::vector<float> px;

  float at(int x, int y) const { return px[std::size_t(y) * w + x]; }
  float& at(int x, int y) { return px[std::size_t(y) * w + x]; }

  double sample(double x, double y) const {
    x = std::clamp(x, 0.0, w - 1.0);
    y = std::clamp(y, 0.0, h - 1.0);
    const int x0 = std::min(int(x), w - 2 < 0 ? 0 : w - 2);
    const int y0 = std::min(int(y), h - 2 < 0 ? 0 : h - 2);
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) +
           fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
  }
};

Image to_image(const Frame& f) {
  Image img;
  img.w = f.width;
  img.h = f.height;
  const auto luma = to_luma(f);
  img.px.assign(luma.begin(), luma.end());
  return img;
}

Image gaussian_blur(const Image& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int rad = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * rad + 1);
  double sum = 0.0;
  for (int i = -rad; i <= rad; ++i) {
    kernel[i + rad] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + rad];
  }
  for (auto& k : kernel) k /= sum;

  Image tmp = src, out = src;
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      double acc = 0.0;
      for (int i = -rad; i <= rad; ++i) {
        acc += kernel[i + rad] * src.at(std::clamp(x + i, 0, src.w - 1), y);
      }
      tmp.at(x, y) = float(acc);
    }
  }
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      double acc = 0.0;
      for (int i = -rad; i <= rad; ++i) {
        acc += kernel[i + rad] * tmp.at(x, std::clamp(y + i, 0, src.h - 1));
      }
      out.at(x, y) = float(acc);
    }
  }
  return out;
}

Image downsample2(const Image& src) {
  Image out;
  out.w = src.w / 2;
  out.h = src.h / 2;
  out.px.resize(std::size_t(out.w) * out.h);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.at(x, y) = float(0.25 * (src.at(2 * x, 2 * y) +
                                   src.at(std::min(2 * x + 1, src.w - 1), 2 * y) +
                                   src.at(2 * x, std::min(2 * y + 1, src.h - 1)) +
                                   src.at(std::min(2 * x + 1, src.w - 1),
                                          std::min(2 * y + 1, src.h - 1))));
    }
  }
  return out;
}

void gradients(const Image& img, Image* gx, Image* gy) {
  gx->w = gy->w = img.w;
  gx->h = gy->h = img.h;
  gx->px.assign(img.px.size(), 0.0f);
  gy->px.assign(img.px.size(), 0.0f);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, img.w - 1);
      const int ym = std::max(y - 1, 0), yp = std::min(y + 1, img.h - 1);
      gx->at(x, y) = float((img.at(xp, y) - img.at(xm, y)) / (xp - xm));
      gy->at(x, y) = float((img.at(x, yp) - img.at(x, ym)) / (yp - ym));
    }
  }
}

}  // namespace

FlowField estimate_flow(const Frame& a, const Frame& b, const FlowConfig& cfg) {
  if (a.width != b.width || a.height != b.height) {
    throw DimensionMismatch("estimate_flow: frame shapes differ");
  }
  const int rad = cfg.window / 2;

  std::vector<Image> pyr_a, pyr_b;
  pyr_a.push_back(gaussian_blur(to_image(a), cfg.smoothing_sigma));
  pyr_b.push_back(gaussian_blur(to_image(b), cfg.smoothing_sigma));
  for (int l = 1; l < cfg.pyramid_levels; ++l) {
    if (pyr_a.back().w / 2 < cfg.window + 2 || pyr_a.back().h / 2 < cfg.window + 2) {
      break;
    }
    pyr_a.push_back(downsample2(gaussian_blur(pyr_a.back(), 1.0)));
    pyr_b.push_back(downsample2(gaussian_blur(pyr_b.back(), 1.0)));
  }

  const int levels = static_cast<int>(pyr_a.size());
  std::vector<float> fu(std::size_t(pyr_a.back().w) * pyr_a.back().h, 0.0f);
  std::vector<float> fv(fu.size(), 0.0f);
  FlowField flow(a.width, a.height);

  for (int level = levels - 1; level >= 0; --level) {
    const Image& ia = pyr_a[level];
    const Image& ib = pyr_b[level];
    Image gx, gy;
    gradients(ia, &gx, &gy);

    if (level != levels - 1) {
      // Upsample the coarser flow and double its magnitude.
      std::vector<float> nu(std::size_t(ia.w) * ia.h), nv(nu.size());
      const Image* coarse = &pyr_a[level + 1];
      const double sx = double(coarse->w - 1) / std::max(1, ia.w - 1);
      const double sy = double(coarse->h - 1) / std::max(1, ia.h - 1);
      Image cu{coarse->w, coarse->h, fu}, cv{coarse->w, coarse->h, fv};
      for (int y = 0; y < ia.h; ++y) {
        for (int x = 0; x < ia.w; ++x) {
          nu[std::size_t(y) * ia.w + x] = float(2.0 * cu.sample(x * sx, y * sy));
          nv[std::size_t(y) * ia.w + x] = float(2.0 * cv.sample(x * sx, y * sy));
        }
      }
      fu = std::move(nu);
      fv = std::move(nv);
    }

    for (int iter = 0; iter < cfg.iterations; ++iter) {
      const bool last = level == 0 && iter == cfg.iterations - 1;
      for (int y = 0; y < ia.h; ++y) {
        for (int x = 0; x < ia.w; ++x) {
          const std::size_t i = std::size_t(y) * ia.w + x;
          double gxx = 0, gxy = 0, gyy = 0, bx = 0, by = 0;
          int count = 0;
          for (int dy = -rad; dy <= rad; ++dy) {
            const int qy = y + dy;
            if (qy < 0 || qy >= ia.h) continue;
            for (int dx = -rad; dx <= rad; ++dx) {
              const int qx = x + dx;
              if (qx < 0 || qx >= ia.w) continue;
              const double tx = qx + fu[i], ty = qy + fv[i];
              if (tx < 0 || ty < 0 || tx > ia.w - 1 || ty > ia.h - 1) continue;
              const double ix = gx.at(qx, qy), iy = gy.at(qx, qy);
              const double it = ia.at(qx, qy) - ib.sample(tx, ty);
              gxx += ix * ix;
              gxy += ix * iy;
              gyy += iy * iy;
              bx += it * ix;
              by += it * iy;
              ++count;
            }
          }
          const int full = cfg.window * cfg.window;
          if (count < full / 2) {
            if (last) flow.valid.set(x, y, false);
            continue;
          }
          const double tr = gxx + gyy;
          const double det = gxx * gyy - gxy * gxy;
          const double min_eig =
              0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
          if (min_eig / count < kEigenThreshold) {
            if (last) flow.valid.set(x, y, false);
            continue;
          }
          double du = (gyy * bx - gxy * by) / det;
          double dv = (gxx * by - gxy * bx) / det;
          const double mag = std::hypot(du, dv);
          if (mag > cfg.window) {
            du *= cfg.window / mag;
            dv *= cfg.window / mag;
          }
          fu[i] += float(du);
          fv[i] += float(dv);
        }
      }
    }
  }

  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      const std::size_t i = std::size_t(y) * a.width + x;
      flow.u[i] = fu[i];
      flow.v[i] = fv[i];
    }
  }
  return flow;
}

namespace {

// Guard radius for estimates produced without frame geometry at hand:
// norm_radius is the half-diagonal by convention, so the frame corners sit
// near normalized radius 1; small headroom covers center jitter.
constexpr double kEstimateGuardRadius = 1.03;

}  // namespace

FrameEstimate oracle_noisy_estimator(const DistortionParams& gt,
                                     const NoiseSigma& sigma,
                                     std::uint64_t seed, int frame_index) {
  Rng rng(seed, 0x6a697474ull + static_cast<std::uint64_t>(frame_index));
  for (int attempt = 0; attempt < 100; ++attempt) {
    DistortionParams p = gt;
    p.k1 += sigma[0] * rng.normal();
    p.k2 += sigma[1] * rng.normal();
    p.k3 += sigma[2] * rng.normal();
    if (valid_radius(p) >= std::min(kEstimateGuardRadius, valid_radius(gt))) {
      return {p, 1.0, frame_index};
    }
  }
  throw SamplingExhausted("oracle_noisy_estimator: guard never satisfied");
}

namespace {

double photometric_objective(const Frame& fisheye,
                             const std::vector<double>& ref_luma,
                             const DistortionParams& p) {
  double need = 0.0;
  for (double cx : {0.0, double(fisheye.width - 1)}) {
    for (double cy : {0.0, double(fisheye.height - 1)}) {
      need = std::max(need, (PixelCoord(cx, cy) - p.center).norm());
    }
  }
  if (valid_radius(p) < need / p.norm_radius) {
    return std::numeric_limits<double>::infinity();
  }
  const FlowField w = intra_frame_flow(p, fisheye.width, fisheye.height);
  auto [corrected, mask] = warp_backward(fisheye, w);
  const auto luma = to_luma(corrected);
  double err = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < luma.size(); ++i) {
    if (!mask.valid[i]) continue;
    err += std::fabs(luma[i] - ref_luma[i]);
    ++n;
  }
  if (n == 0) return std::numeric_limits<double>::infinity();
  return err / double(n);
}

}  // namespace

FrameEstimate photometric_search_estimator(const Frame& fisheye,
                                           const Frame& reference,
                                           const DistortionParams& init,
                                           int frame_index) {
  if (fisheye.width != reference.width ||
      fisheye.height != reference.height) {
    throw DimensionMismatch("photometric_search: frame shapes differ");
  }
  const auto ref_luma = to_luma(reference);
  int evals = 0;
  const int max_evals = 200;
  auto objective = [&](double k1, double k2) {
    ++evals;
    DistortionParams p = init;
    p.k1 = k1;
    p.k2 = k2;
    return photometric_objective(fisheye, ref_luma, p);
  };

  const double init_obj = objective(init.k1, init.k2);
  double best_k1 = init.k1, best_k2 = init.k2, best_obj = init_obj;

  const double golden = 0.6180339887498949;
  const double spans[2] = {0.08, 0.04};
  for (int sweep = 0; sweep < 2 && evals < max_evals; ++sweep) {
    for (int coord = 0; coord < 2 && evals < max_evals; ++coord) {
      const double span = spans[coord] / (sweep + 1);
      double lo = (coord == 0 ? best_k1 : best_k2) - span;
      double hi = (coord == 0 ? best_k1 : best_k2) + span;
      auto eval1 = [&](double t) {
        return coord == 0 ? objective(t, best_k2) : objective(best_k1, t);
      };
      double x1 = hi - golden * (hi - lo);
      double x2 = lo + golden * (hi - lo);
      double f1 = eval1(x1), f2 = eval1(x2);
      while (hi - lo > 1e-3 && evals < max_evals) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - golden * (hi - lo);
          f1 = eval1(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + golden * (hi - lo);
          f2 = eval1(x2);
        }
      }
      const double xb = f1 <= f2 ? x1 : x2;
      const double fb = std::min(f1, f2);
      if (fb < best_obj) {
        best_obj = fb;
        (coord == 0 ? best_k1 : best_k2) = xb;
      }
    }
  }

  if (!(best_obj < init_obj - 1e-9)) {
    return {init, 0.0, frame_index};
  }
  DistortionParams p = init;
  p.k1 = best_k1;
  p.k2 = best_k2;
  const double confidence = 1.0 - std::clamp(best_obj / 255.0, 0.0, 1.0);
  return {p, confidence, frame_index};
}

}  // namespace fvc
