#include "fvc/plot.hpp"

#include <algorithm>
#include <cmath>

namespace fvc {

namespace {

struct Color {
  std::uint8_t r, g, b;
};

constexpr Color kPalette[] = {
    {200, 40, 40}, {40, 110, 200}, {30, 150, 70}, {190, 140, 20},
    {140, 60, 170}, {60, 60, 60},
};

void put_pixel(Frame& f, int x, int y, Color c) {
  if (x < 0 || y < 0 || x >= f.width || y >= f.height) return;
  f.at(x, y, 0) = c.r;
  f.at(x, y, 1) = c.g;
  f.at(x, y, 2) = c.b;
}

void draw_line(Frame& f, int x0, int y0, int x1, int y1, Color c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put_pixel(f, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

// 3x5 digit/letter-free marker: a small filled square as a series key.
void draw_key(Frame& f, int x, int y, Color c) {
  for (int dy = 0; dy < 6; ++dy) {
    for (int dx = 0; dx < 6; ++dx) put_pixel(f, x + dx, y + dy, c);
  }
}

}  // namespace

Frame render_line_chart(const std::vector<PlotSeries>& series, int width,
                        int height) {
  Frame chart(width, height, 3, 255);
  const int margin = 24;
  const int x0 = margin, y0 = height - margin;
  const int x1 = width - margin / 2, y1 = margin / 2;
  draw_line(chart, x0, y0, x1, y0, {0, 0, 0});
  draw_line(chart, x0, y0, x0, y1, {0, 0, 0});

  double lo = 0.0, hi = 1e-12;
  std::size_t len = 0;
  for (const auto& s : series) {
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    len = std::max(len, s.values.size());
  }
  if (len < 2) return chart;
  const double span = hi - lo > 1e-12 ? hi - lo : 1.0;

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Color c = kPalette[si % std::size(kPalette)];
    draw_key(chart, x0 + 8 + int(si) * 14, 4, c);
    const auto& vals = series[si].values;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      auto px = [&](std::size_t t) {
        return x0 + int(double(t) * (x1 - x0) / double(len - 1));
      };
      auto py = [&](double v) {
        return y0 - int((v - lo) / span * (y0 - y1));
      };
      draw_line(chart, px(i), py(vals[i]), px(i + 1), py(vals[i + 1]), c);
    }
  }
  return chart;
}

Frame render_flow_magnitude(const FlowField& flow, double max_px) {
  Frame out(flow.width, flow.height, 1, 0);
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      if (!flow.valid.at(x, y)) continue;
      const double mag = flow.at(x, y).norm();
      out.at(x, y) = quantize(255.0 * std::min(1.0, mag / max_px));
    }
  }
  return out;
}

}  // namespace fvc
