#include "fvc/metrics.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include <json.hpp>

#include "fvc/errors.hpp"

namespace fvc {

namespace {
constexpr double kPsnrSentinel = 99.0;
}

double psnr(const Frame& a, const Frame& b, const ValidityMask& mask) {
  if (!a.same_shape(b) || a.width != mask.width || a.height != mask.height) {
    throw DimensionMismatch("psnr: shapes differ");
  }
  double sse = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < a.channels; ++c) {
        const double d = double(a.at(x, y, c)) - b.at(x, y, c);
        sse += d * d;
        ++n;
      }
    }
  }
  if (n == 0) throw EmptyValidRegion("psnr: empty mask");
  const double mse = sse / double(n);
  if (mse == 0.0) return kPsnrSentinel;
  return std::min(kPsnrSentinel, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim(const Frame& a, const Frame& b, const ValidityMask& mask) {
  if (!a.same_shape(b) || a.width != mask.width || a.height != mask.height) {
    throw DimensionMismatch("ssim: shapes differ");
  }
  if (a.width < 11 || a.height < 11) {
    throw DimensionMismatch("ssim: frames must be at least 11x11");
  }
  const auto la = to_luma(a);
  const auto lb = to_luma(b);

  constexpr int rad = 5;
  constexpr double sigma = 1.5;
  double kernel[11][11];
  double ksum = 0.0;
  for (int dy = -rad; dy <= rad; ++dy) {
    for (int dx = -rad; dx <= rad; ++dx) {
      kernel[dy + rad][dx + rad] =
          std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
      ksum += kernel[dy + rad][dx + rad];
    }
  }
  for (auto& row : kernel) {
    for (double& k : row) k /= ksum;
  }

  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double total = 0.0;
  std::size_t windows = 0;
  for (int y = rad; y < a.height - rad; ++y) {
    for (int x = rad; x < a.width - rad; ++x) {
      bool ok = true;
      for (int dy = -rad; dy <= rad && ok; ++dy) {
        for (int dx = -rad; dx <= rad; ++dx) {
          if (!mask.at(x + dx, y + dy)) {
            ok = false;
            break;
          }
        }
      }
      if (!ok) continue;
      double mu_a = 0, mu_b = 0;
      for (int dy = -rad; dy <= rad; ++dy) {
        for (int dx = -rad; dx <= rad; ++dx) {
          const std::size_t i = std::size_t(y + dy) * a.width + (x + dx);
          const double k = kernel[dy + rad][dx + rad];
          mu_a += k * la[i];
          mu_b += k * lb[i];
        }
      }
      double var_a = 0, var_b = 0, cov = 0;
      for (int dy = -rad; dy <= rad; ++dy) {
        for (int dx = -rad; dx <= rad; ++dx) {
          const std::size_t i = std::size_t(y + dy) * a.width + (x + dx);
          const double k = kernel[dy + rad][dx + rad];
          var_a += k * (la[i] - mu_a) * (la[i] - mu_a);
          var_b += k * (lb[i] - mu_b) * (lb[i] - mu_b);
          cov += k * (la[i] - mu_a) * (lb[i] - mu_b);
        }
      }
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++windows;
    }
  }
  if (windows == 0) throw EmptyValidRegion("ssim: no fully valid window");
  return total / double(windows);
}

double epe(const FlowField& flow, const FlowField& gt) {
  if (!flow.same_shape(gt)) throw DimensionMismatch("epe: shapes differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    if (!flow.valid.valid[i] || !gt.valid.valid[i]) continue;
    sum += std::hypot(double(flow.u[i]) - gt.u[i],
                      double(flow.v[i]) - gt.v[i]);
    ++n;
  }
  if (n == 0) throw EmptyValidRegion("epe: empty joint valid region");
  return sum / double(n);
}

double jitter_score(const std::vector<FlowField>& flows) {
  if (flows.size() < 2) {
    throw LengthMismatch("jitter_score: need at least 2 fields");
  }
  for (const auto& f : flows) {
    if (!f.same_shape(flows.front())) {
      throw DimensionMismatch("jitter_score: shapes differ");
    }
  }
  const std::size_t npix = flows.front().u.size();
  const double t = double(flows.size());
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < npix; ++i) {
    bool ok = true;
    for (const auto& f : flows) ok = ok && f.valid.valid[i];
    if (!ok) continue;
    double mu = 0, mv = 0;
    for (const auto& f : flows) {
      mu += f.u[i];
      mv += f.v[i];
    }
    mu /= t;
    mv /= t;
    double vu = 0, vv = 0;
    for (const auto& f : flows) {
      vu += (f.u[i] - mu) * (f.u[i] - mu);
      vv += (f.v[i] - mv) * (f.v[i] - mv);
    }
    sum += std::sqrt((vu + vv) / t);
    ++n;
  }
  if (n == 0) throw EmptyValidRegion("jitter_score: empty joint region");
  return sum / double(n);
}

namespace {

PathSample fit_transform(const FlowField& flow) {
  // Similarity part: centered LS of q' = s R q; translation is the mean
  // displacement. A separate affine fit supplies the anisotropy.
  double cx = 0, cy = 0, mu = 0, mv = 0;
  std::size_t n = 0;
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      if (!flow.valid.at(x, y)) continue;
      cx += x;
      cy += y;
      mu += flow.u[flow.idx(x, y)];
      mv += flow.v[flow.idx(x, y)];
      ++n;
    }
  }
  if (n < 16) throw DegenerateFit("camera_path: too few valid flow pixels");
  cx /= double(n);
  cy /= double(n);
  mu /= double(n);
  mv /= double(n);

  double sa = 0, sb = 0, sq = 0;
  // Affine normal equations, one 3x3 system shared by both rows.
  double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  double ru[3] = {0, 0, 0}, rv[3] = {0, 0, 0};
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      if (!flow.valid.at(x, y)) continue;
      const double qx = x - cx, qy = y - cy;
      const double px = x + flow.u[flow.idx(x, y)] - (cx + mu);
      const double py = y + flow.v[flow.idx(x, y)] - (cy + mv);
      sa += qx * px + qy * py;
      sb += qx * py - qy * px;
      sq += qx * qx + qy * qy;

      const double row[3] = {qx, qy, 1.0};
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
        ru[i] += row[i] * px;
        rv[i] += row[i] * py;
      }
    }
  }
  if (sq < 1e-9) throw DegenerateFit("camera_path: degenerate geometry");

  PathSample s;
  s.tx = mu;
  s.ty = mv;
  const double a = sa / sq, b = sb / sq;
  s.scale = std::hypot(a, b);
  if (!(s.scale > 0.0)) throw DegenerateFit("camera_path: zero scale fit");
  s.rotation = std::atan2(b, a);

  // Solve the two 3x3 systems by Gaussian elimination.
  double aug[3][5];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) aug[i][j] = m[i][j];
    aug[i][3] = ru[i];
    aug[i][4] = rv[i];
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(aug[r][col]) > std::fabs(aug[piv][col])) piv = r;
    }
    if (std::fabs(aug[piv][col]) < 1e-12) {
      throw DegenerateFit("camera_path: singular affine system");
    }
    std::swap(aug[col], aug[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = aug[r][col] / aug[col][col];
      for (int j = col; j < 5; ++j) aug[r][j] -= f * aug[col][j];
    }
  }
  const double a11 = aug[0][3] / aug[0][0];
  const double a12 = aug[1][3] / aug[1][1];
  const double a21 = aug[0][4] / aug[0][0];
  const double a22 = aug[1][4] / aug[1][1];

  // Singular values of the 2x2 linear part, closed form.
  const double e = 0.5 * (a11 + a22), f2 = 0.5 * (a11 - a22);
  const double g = 0.5 * (a21 + a12), h2 = 0.5 * (a21 - a12);
  const double q = std::hypot(e, h2), r = std::hypot(f2, g);
  const double smax = q + r, smin = std::fabs(q - r);
  s.anisotropy = smax > 1e-12 ? smin / smax : 0.0;
  return s;
}

}  // namespace

CameraPath camera_path(const std::vector<Frame>& video,
                       const FlowConfig& flow_cfg) {
  if (video.size() < 2) {
    throw LengthMismatch("camera_path: need at least 2 frames");
  }
  CameraPath path;
  for (std::size_t i = 0; i + 1 < video.size(); ++i) {
    path.samples.push_back(
        fit_transform(estimate_flow(video[i], video[i + 1], flow_cfg)));
  }
  return path;
}

namespace {

// Fraction of non-DC spectral energy in one-sided bins 2..6; empty or
// constant sequences score 1 by convention.
double low_frequency_ratio(const std::vector<double>& seq) {
  const std::size_t n = seq.size();
  const std::size_t half = n / 2;
  double total = 0.0, low = 0.0;
  for (std::size_t k = 1; k <= half; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * 3.141592653589793 * double(k) * double(t) /
                         double(n);
      acc += seq[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    const double energy = std::norm(acc);
    total += energy;
    if (k >= 2 && k <= 6) low += energy;
  }
  if (total < 1e-12) return 1.0;
  return low / total;
}

}  // namespace

StabilityTriple stability_triple(const CameraPath& path) {
  if (path.samples.size() < 8) {
    throw PathTooShort("stability_triple: need at least 8 samples");
  }
  StabilityTriple t;
  double crop = 0.0, dist = 0.0;
  std::vector<double> tx, ty, rot;
  for (const auto& s : path.samples) {
    crop += std::min(1.0, 1.0 / s.scale);
    dist += s.anisotropy;
    tx.push_back(s.tx);
    ty.push_back(s.ty);
    rot.push_back(s.rotation);
  }
  t.cropping = crop / double(path.samples.size());
  t.distortion = dist / double(path.samples.size());
  t.stability = (low_frequency_ratio(tx) + low_frequency_ratio(ty) +
                 low_frequency_ratio(rot)) /
                3.0;
  return t;
}

std::string metric_csv_header() {
  return "video,psnr,ssim,epe,cropping,distortion,stability,jitter,"
         "frames,valid_pixels,config_hash";
}

std::string metric_csv_row(const MetricReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << r.video_id << ',' << r.psnr_db << ',' << r.ssim_value << ','
     << r.epe_px << ',' << r.cropping << ',' << r.distortion << ','
     << r.stability << ',' << r.jitter_px << ',' << r.frame_count << ','
     << r.valid_pixels << ',' << r.config_hash;
  return os.str();
}

std::string metrics_to_json(const std::vector<MetricReport>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) {
    j.push_back({{"video", r.video_id},
                 {"psnr", r.psnr_db},
                 {"ssim", r.ssim_value},
                 {"epe", r.epe_px},
                 {"cropping", r.cropping},
                 {"distortion", r.distortion},
                 {"stability", r.stability},
                 {"jitter", r.jitter_px},
                 {"frames", r.frame_count},
                 {"valid_pixels", r.valid_pixels},
                 {"config_hash", r.config_hash}});
  }
  return j.dump(2);
}

}  // namespace fvc
