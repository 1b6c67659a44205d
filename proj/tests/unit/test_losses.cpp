// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "skylm/errors.h"
#include "skylm/fit.h"
#include "skylm/losses.h"
#include "skylm/transport.h"

using namespace skylm;

namespace {

LMParams base_params() {
  LMParams q;
  q.sun_pos = SunPosition::make(0.8, 1.0);
  q.sun = {{100.0, 90.0, 80.0}, 50.0, 0.2};
  q.sky = {{0.3, 0.35, 0.5}, 4.0};
  return q;
}

const TransportMatrix& small_transport() {
  static const TransportMatrix t = [] {
    ProbeScene s;
    s.render_width = 24;
    s.render_height = 24;
    return build_transport(s, 16);
  }();
  return t;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("default weights") {
  // Parameter weights for kappa, beta and w_sun, and the sky render weight.
  struct Row {
    const char* name;
    double configured;
    double expected;
  };
  const LossWeights w;
  const Row table[] = {{"kappa", w.kappa, 5.0},
                       {"beta", w.beta, 10.0},
                       {"w_sun", w.w_sun, 10.0},
                       {"sky_render", w.sky_render, 0.2},
                       {"sun_render", w.sun_render, 1.0},
                       {"lm_render", w.lm_render, 1.0}};
  for (const Row& r : table) {
    CAPTURE(r.name);
    CHECK(r.configured == r.expected);
  }
  LossWeights bad;
  bad.beta = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("param_losses applies each weight to its own term") {
  const ParamRanges ranges;
  const LossWeights w;
  const LMParams a = base_params();
  CHECK(param_losses(a, a, ranges, w) == 0.0);

  LMParams b = a;
  b.sun.beta = a.sun.beta + 30.0;
  const double db = 30.0 / 200.0;
  CHECK(param_losses(a, b, ranges, w) == doctest::Approx(10.0 * db * db).epsilon(1e-14));

  b = a;
  b.sun.kappa = a.sun.kappa + 0.4;
  const double dk = 0.4 / (2.0 - 0.001);
  CHECK(param_losses(a, b, ranges, w) == doctest::Approx(5.0 * dk * dk).epsilon(1e-14));

  b = a;
  b.sun.w_sun.g += 2e6;
  CHECK(param_losses(a, b, ranges, w) == doctest::Approx(10.0 * 0.2 * 0.2).epsilon(1e-12));

  b = a;
  b.sky.turbidity = 8.0;
  const double dt = 4.0 / (20.0 - 1.7);
  CHECK(param_losses(a, b, ranges, w) == doctest::Approx(dt * dt).epsilon(1e-14));

  // Sun position does not enter.
  b = a;
  b.sun_pos = SunPosition::make(0.1, 4.0);
  CHECK(param_losses(a, b, ranges, w) == 0.0);

  LossWeights custom;
  custom.beta = 3.0;
  b = a;
  b.sun.beta = a.sun.beta + 30.0;
  CHECK(param_losses(a, b, ranges, custom) == doctest::Approx(3.0 * db * db).epsilon(1e-14));

  b = a;
  b.sun.beta = 500.0;
  CHECK_THROWS_AS(param_losses(a, b, ranges, w), InvalidInput);
}

TEST_CASE("weighted render loss") {
  const RenderLosses l{2.0, 3.0, 5.0};
  CHECK(weighted_render_loss(l, LossWeights{}) == doctest::Approx(5.0 + 0.2 * 2.0 + 3.0));
}

TEST_CASE("panorama and scalar losses") {
  EnvMap a(8), b(8);
  CHECK(pano_l1(a, a) == 0.0);
  for (float& x : b.data()) x = 0.25f;
  CHECK(pano_l1(a, b) == doctest::Approx(0.25));
  CHECK_THROWS_AS(pano_l1(a, EnvMap(4)), DimensionMismatch);
  CHECK(elevation_l2(0.3, 0.3) == 0.0);
  CHECK(elevation_l2(0.3, 0.5) == doctest::Approx(0.04));
}

TEST_CASE("render_l2") {
  const TransportMatrix& t = small_transport();
  EnvMap zero(16), sky(16);
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 32; ++u)
      for (int c = 0; c < 3; ++c) sky.at(u, v, c) = 1.5f;
  CHECK(render_l2(t, sky, sky) == 0.0);
  const RenderImage r = render_probe(t, sky);
  double ms = 0.0;
  for (float x : r.data) ms += double{x} * x;
  ms /= static_cast<double>(r.data.size());
  CHECK(render_l2(t, zero, sky) == doctest::Approx(ms).epsilon(1e-12));
}

TEST_CASE("lm_render_losses") {
  const TransportMatrix& t = small_transport();
  const LMParams q = base_params();
  const EnvMap hdr = render_envmap(q, 16);
  const EnvMap sky = render_sky_envmap(q, 16);
  const RenderLosses exact = lm_render_losses(t, hdr, sky, q);
  CHECK(exact.sky == doctest::Approx(0.0));
  CHECK(exact.sun < 1e-8);
  CHECK(exact.lm == 0.0);

  // Through the LDR pipeline, quantization noise only.
  LMParams dim = q;
  dim.sun.w_sun = {};
  const EnvMap dim_hdr = render_envmap(dim, 16);
  const RenderLosses noisy = lm_render_losses(t, dim_hdr, clipped_ldr(dim_hdr), dim);
  CHECK(noisy.sky < 1e-3);
  CHECK(noisy.sun < 1e-3);
  CHECK(noisy.lm < 1e-3);

  LMParams off = q;
  off.sky.turbidity = 9.0;
  CHECK(lm_render_losses(t, hdr, sky, off).sky > exact.sky);
  CHECK_THROWS_AS(lm_render_losses(t, hdr, EnvMap(8), q), DimensionMismatch);
}

TEST_CASE("sun position bins and distributions") {
  CHECK(elevation_bin(0.0) == 0);
  CHECK(elevation_bin(kPi / 2) == kSunElevationBins - 1);
  CHECK(azimuth_bin(kTwoPi - 1e-9) == kSunAzimuthBins - 1);
  CHECK(azimuth_bin(-0.01) == kSunAzimuthBins - 1);
  const SunPosition c = bin_center(3, 10);
  CHECK(elevation_bin(c.elevation()) == 3);
  CHECK(azimuth_bin(c.azimuth) == 10);

  const SunPosDistribution one_hot = bin_sun_position(c, 0.0);
  CHECK(one_hot.at(3, 10) == 1.0);
  double total = 0.0;
  for (double p : one_hot.p) total += p;
  CHECK(total == 1.0);

  const SunPosDistribution smooth = bin_sun_position(bin_center(5, 0), 1.0);
  CHECK_NOTHROW(smooth.validate());
  CHECK(smooth.at(5, 63) == doctest::Approx(smooth.at(5, 1)));
  CHECK(smooth.at(5, 0) > smooth.at(5, 1));

  SunPosDistribution bad;
  bad.at(0, 0) = 0.5;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("kl divergence") {
  const std::vector<double> p{0.2, 0.3, 0.5};
  CHECK(kl_divergence(p, p) == 0.0);
  const std::vector<double> one_hot{0.0, 1.0, 0.0};
  CHECK(kl_divergence(one_hot, p) == doctest::Approx(-std::log(0.3)));
  const SunPosDistribution d = bin_sun_position(bin_center(2, 2), 1.0);
  CHECK(kl_divergence(d, d) == 0.0);
}

}  // TEST_SUITE
