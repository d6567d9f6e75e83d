#include "fvc/temporal.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "fvc/errors.hpp"

namespace fvc {

namespace {

// Snap to 12 significant decimal digits. The progression a1 - i*d built from
// decimal parameters (0.3, 0.05, ...) accumulates half-ulp errors that make
// e.g. 0.3 - 2*0.05 differ from the literal 0.2; re-rounding through the
// shortest decimal restores the canonical values bitwise.
double snap12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace

WeightScheme make_weights(int n, double a1) {
  if (n < 2) throw InvalidWeightRange("make_weights: n must be >= 2");
  if (!(a1 > 1.0 / n && a1 < 2.0 / n)) {
    throw InvalidWeightRange("make_weights: a1 must lie in (1/n, 2/n)");
  }
  WeightScheme s;
  s.n = n;
  s.a1 = a1;
  const double d = 2.0 * (n * a1 - 1.0) / (double(n) * (n - 1));
  s.weights.resize(n);
  for (int i = 0; i < n; ++i) s.weights[i] = snap12(a1 - i * d);
  return s;
}

namespace {

// Leading m weights of the scheme, renormalized to sum 1.
std::vector<double> truncated_weights(const WeightScheme& scheme, int m) {
  std::vector<double> w(scheme.weights.begin(), scheme.weights.begin() + m);
  double sum = 0.0;
  for (double x : w) sum += x;
  for (double& x : w) x /= sum;
  return w;
}

FlowField weighted_sum(const std::vector<const FlowField*>& flows,
                       const std::vector<double>& weights) {
  const FlowField& first = *flows.front();
  for (const FlowField* f : flows) {
    if (!f->same_shape(first)) {
      throw DimensionMismatch("tws_combine: flow shapes differ");
    }
  }
  FlowField out(first.width, first.height);
  const std::size_t n = out.u.size();
  for (std::size_t i = 0; i < n; ++i) {
    double su = 0.0, sv = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k < flows.size(); ++k) {
      ok = ok && flows[k]->valid.valid[i];
      su += weights[k] * flows[k]->u[i];
      sv += weights[k] * flows[k]->v[i];
    }
    out.u[i] = float(su);
    out.v[i] = float(sv);
    out.valid.valid[i] = ok ? 1 : 0;
  }
  return out;
}

}  // namespace

FlowField tws_combine(const std::vector<FlowField>& flows,
                      const WeightScheme& scheme) {
  if (static_cast<int>(flows.size()) != scheme.n) {
    throw LengthMismatch("tws_combine: expected n flows");
  }
  std::vector<const FlowField*> ptrs;
  for (const auto& f : flows) ptrs.push_back(&f);
  return weighted_sum(ptrs, scheme.weights);
}

std::vector<FlowField> stabilize_stream(const std::vector<FlowField>& stream,
                                        const WeightScheme& scheme) {
  std::vector<FlowField> out;
  out.reserve(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const int m = static_cast<int>(std::min<std::size_t>(t + 1, scheme.n));
    const auto weights = m == scheme.n ? scheme.weights
                                       : truncated_weights(scheme, m);
    std::vector<const FlowField*> window;
    for (int i = 0; i < m; ++i) {
      // Oldest frame of the window takes the first (largest) weight.
      window.push_back(&stream[t - m + 1 + i]);
    }
    out.push_back(weighted_sum(window, weights));
  }
  return out;
}

namespace {

DistortionParams weighted_params(const std::vector<const FrameEstimate*>& est,
                                 const std::vector<double>& weights) {
  DistortionParams p;
  p.k1 = p.k2 = p.k3 = 0.0;
  p.center = {0.0, 0.0};
  p.norm_radius = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const DistortionParams& q = est[i]->params;
    const double w = weights[i];
    p.k1 += w * q.k1;
    p.k2 += w * q.k2;
    p.k3 += w * q.k3;
    p.center.x += w * q.center.x;
    p.center.y += w * q.center.y;
    p.norm_radius += w * q.norm_radius;
  }
  if (valid_radius(p) <= 0.0) {
    throw MonotonicityViolation(
        "combine_params: combined params fail the monotonicity guard");
  }
  return p;
}

}  // namespace

DistortionParams combine_params(const std::vector<FrameEstimate>& estimates,
                                const WeightScheme& scheme) {
  if (static_cast<int>(estimates.size()) != scheme.n) {
    throw LengthMismatch("combine_params: expected n estimates");
  }
  std::vector<const FrameEstimate*> ptrs;
  for (const auto& e : estimates) ptrs.push_back(&e);
  return weighted_params(ptrs, scheme.weights);
}

std::vector<DistortionParams> stabilize_param_stream(
    const std::vector<FrameEstimate>& stream, const WeightScheme& scheme) {
  std::vector<DistortionParams> out;
  out.reserve(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const int m = static_cast<int>(std::min<std::size_t>(t + 1, scheme.n));
    const auto weights = m == scheme.n ? scheme.weights
                                       : truncated_weights(scheme, m);
    std::vector<const FrameEstimate*> window;
    for (int i = 0; i < m; ++i) window.push_back(&stream[t - m + 1 + i]);
    out.push_back(weighted_params(window, weights));
  }
  return out;
}

}  // namespace fvc
