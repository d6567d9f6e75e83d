#include <doctest.h>

#include <cmath>

#include "fvc/distortion.hpp"
#include "fvc/errors.hpp"
#include "fvc/rng.hpp"

using namespace fvc;

TEST_SUITE("distortion") {

TEST_CASE("radial scale matches a hand-evaluated polynomial") {
  DistortionParams p;
  p.k1 = -0.2;
  p.k2 = 0.05;
  p.k3 = -0.01;
  // 1 - 0.2*0.25 + 0.05*0.0625 - 0.01*0.015625, written out by hand.
  CHECK(radial_scale(0.5, p) == doctest::Approx(0.95296875).epsilon(1e-15));
  CHECK(radial_scale(0.0, p) == doctest::Approx(1.0));
}

TEST_CASE("forward mapping matches a worked example") {
  DistortionParams p;
  p.k1 = -0.2;
  p.center = {128.0, 128.0};
  p.norm_radius = 181.019335984;

  // pd at normalized radius 0.5 on the +x axis. scale = 1 - 0.2*0.25 = 0.95,
  // so pu = center + 0.95 * (pd - center).
  const PixelCoord pd{128.0 + 0.5 * p.norm_radius, 128.0};
  const PixelCoord pu = undistorted_of(pd, p);
  CHECK(pu.x == doctest::Approx(128.0 + 0.95 * 0.5 * p.norm_radius)
                    .epsilon(1e-12));
  CHECK(pu.y == doctest::Approx(128.0).epsilon(1e-12));

  const PixelCoord back = distorted_of(pu, p);
  CHECK(std::hypot(back.x - pd.x, back.y - pd.y) < 1e-9);
}

TEST_CASE("valid radius agrees with the closed form for pure k1") {
  // g'(r) = 1 + 3 k1 r^2 vanishes at sqrt(-1/(3 k1)).
  DistortionParams p;
  p.k1 = -0.2;
  CHECK(valid_radius(p) == doctest::Approx(std::sqrt(1.0 / 0.6)).epsilon(2e-3));
  p.k1 = -1.0;
  CHECK(valid_radius(p) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(2e-3));
  p.k1 = 0.0;  // monotone everywhere: capped at the scan limit
  CHECK(valid_radius(p) == doctest::Approx(kMaxNormRadius).epsilon(2e-3));
}

TEST_CASE("round trip is sub-1e-6 px over the valid disc") {
  DistortionParams p = default_params(256, 256);
  p.k1 = -0.28;
  p.k2 = 0.03;
  p.k3 = -0.004;
  const double rv = valid_radius(p);
  const double reach = radial_forward(rv, p);  // largest invertible pu radius

  Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double rho = 0.98 * reach * std::sqrt(rng.next_double());
    const double th = rng.uniform(0.0, 2.0 * M_PI);
    const PixelCoord pu{p.center.x + rho * p.norm_radius * std::cos(th),
                        p.center.y + rho * p.norm_radius * std::sin(th)};
    const PixelCoord pd = distorted_of(pu, p);
    const PixelCoord back = undistorted_of(pd, p);
    worst = std::max(worst, std::hypot(back.x - pu.x, back.y - pu.y));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("mapping is rotationally symmetric about the center") {
  DistortionParams p = default_params(256, 256);
  p.k1 = -0.2;
  p.k2 = 0.01;
  const double rho = 60.0;
  const double r0 = std::hypot(undistorted_of({p.center.x + rho, p.center.y},
                                              p).x - p.center.x, 0.0);
  for (double th : {0.7, 1.9, 3.3, 5.1}) {
    const PixelCoord pd{p.center.x + rho * std::cos(th),
                        p.center.y + rho * std::sin(th)};
    const PixelCoord pu = undistorted_of(pd, p);
    CHECK(std::hypot(pu.x - p.center.x, pu.y - p.center.y) ==
          doctest::Approx(r0).epsilon(1e-12));
  }
}

TEST_CASE("identity params give identity mappings and zero flow") {
  const DistortionParams p = default_params(64, 64);
  const PixelCoord q{11.5, 40.25};
  const PixelCoord pd = distorted_of(q, p);
  CHECK(pd.x == doctest::Approx(q.x));
  CHECK(pd.y == doctest::Approx(q.y));

  const FlowField w = intra_frame_flow(p, 64, 64);
  for (std::size_t i = 0; i < w.u.size(); ++i) {
    CHECK(w.u[i] == 0.0f);
    CHECK(w.v[i] == 0.0f);
    CHECK(w.valid.valid[i] == 1);
  }
}

TEST_CASE("non-invertible targets are reported, not fabricated") {
  DistortionParams p = default_params(256, 256);
  p.k1 = -0.2;
  // Normalized radius 1 exceeds g(valid_radius) ~ 0.861 for this k1.
  const PixelCoord far{p.center.x + p.norm_radius, p.center.y};
  CHECK(!try_distorted_of(far, p).has_value());
  CHECK_THROWS_AS(distorted_of(far, p), NonInvertible);

  const FlowField w = intra_frame_flow(p, 256, 256);
  CHECK(w.valid.at(128, 128));
  CHECK(!w.valid.at(0, 0));  // the corner sits at normalized radius 1
}

TEST_CASE("flow field agrees with the point mapping where valid") {
  DistortionParams p = default_params(128, 128);
  p.k1 = -0.15;
  const FlowField w = intra_frame_flow(p, 128, 128);
  for (int y : {20, 64, 100}) {
    for (int x : {20, 64, 100}) {
      REQUIRE(w.valid.at(x, y));
      const PixelCoord pd = distorted_of({double(x), double(y)}, p);
      CHECK(w.at(x, y).x == doctest::Approx(pd.x - x).epsilon(1e-6));
      CHECK(w.at(x, y).y == doctest::Approx(pd.y - y).epsilon(1e-6));
    }
  }
}

TEST_CASE("params survive the JSON round trip") {
  DistortionParams p;
  p.k1 = -0.234567;
  p.k2 = 0.0123;
  p.k3 = -0.00077;
  p.center = {127.25, 129.75};
  p.norm_radius = 180.3122292025696;
  const DistortionParams q = params_from_json(params_to_json(p));
  CHECK(q.k1 == doctest::Approx(p.k1).epsilon(1e-15));
  CHECK(q.k2 == doctest::Approx(p.k2).epsilon(1e-15));
  CHECK(q.k3 == doctest::Approx(p.k3).epsilon(1e-15));
  CHECK(q.center.x == doctest::Approx(p.center.x).epsilon(1e-15));
  CHECK(q.center.y == doctest::Approx(p.center.y).epsilon(1e-15));
  CHECK(q.norm_radius == doctest::Approx(p.norm_radius).epsilon(1e-15));
}

TEST_CASE("default params center the model on the pixel grid") {
  const DistortionParams p = default_params(256, 192);
  CHECK(p.center.x == doctest::Approx(127.5));
  CHECK(p.center.y == doctest::Approx(95.5));
  CHECK(p.norm_radius ==
        doctest::Approx(std::hypot(127.5, 95.5)).epsilon(1e-12));
  CHECK(p.identity());
}

}  // TEST_SUITE
