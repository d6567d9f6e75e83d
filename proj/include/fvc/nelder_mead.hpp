#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace fvc {

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  int evaluations = 0;
};

// Standard downhill simplex (reflection 1, expansion 2, contraction 0.5,
// shrink 0.5). Stops when the simplex diameter falls below diameter_tol or
// the evaluation budget is exhausted; returns the best point seen.
inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x0, const std::vector<double>& steps,
    int max_evals, double diameter_tol) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += steps[i];

  int evals = 0;
  std::vector<double> fs(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    fs[i] = f(pts[i]);
    ++evals;
  }

  auto order = [&] {
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<std::vector<double>> np(n + 1);
    std::vector<double> nf(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      np[i] = pts[idx[i]];
      nf[i] = fs[idx[i]];
    }
    pts = std::move(np);
    fs = std::move(nf);
  };
  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        s += (pts[i][j] - pts[0][j]) * (pts[i][j] - pts[0][j]);
      }
      d = std::max(d, std::sqrt(s));
    }
    return d;
  };

  order();
  while (evals < max_evals && diameter() > diameter_tol) {
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
    }
    for (double& c : centroid) c /= double(n);

    auto blend = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j) {
        p[j] = centroid[j] + t * (centroid[j] - pts[n][j]);
      }
      return p;
    };

    const auto refl = blend(1.0);
    const double f_refl = f(refl);
    ++evals;
    if (f_refl < fs[0]) {
      const auto exp_p = blend(2.0);
      const double f_exp = f(exp_p);
      ++evals;
      if (f_exp < f_refl) {
        pts[n] = exp_p;
        fs[n] = f_exp;
      } else {
        pts[n] = refl;
        fs[n] = f_refl;
      }
    } else if (f_refl < fs[n - 1]) {
      pts[n] = refl;
      fs[n] = f_refl;
    } else {
      const auto con = blend(f_refl < fs[n] ? 0.5 : -0.5);
      const double f_con = f(con);
      ++evals;
      if (f_con < std::min(f_refl, fs[n])) {
        pts[n] = con;
        fs[n] = f_con;
      } else {
        for (std::size_t i = 1; i <= n && evals < max_evals; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
          }
          fs[i] = f(pts[i]);
          ++evals;
        }
      }
    }
    order();
  }

  return {pts[0], fs[0], evals};
}

}  // namespace fvc
