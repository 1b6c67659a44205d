// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "skylm/envmap.h"
#include "skylm/errors.h"
#include "skylm/fit.h"
#include "skylm/metrics.h"
#include "skylm/random.h"
#include "skylm/synthetic.h"

using namespace skylm;

namespace {

constexpr int kEnv = 16;

const TransportMatrix& transport() {
  static const TransportMatrix t = [] {
    ProbeScene s;
    s.render_width = 32;
    s.render_height = 32;
    return build_transport(s, kEnv);
  }();
  return t;
}

LMParams sunny() {
  LMParams q;
  q.sun_pos = SunPosition::make(0.7, 2.0);
  q.sky = {{0.3, 0.35, 0.45}, 3.5};
  q.sun.beta = 40.0;
  q.sun.kappa = 0.08;
  const double e_sky = 0.35 * sky_irradiance(q.sun_pos, q.sky.turbidity, kEnv);
  const double e_sun = sun_irradiance(q.sun_pos, q.sun.beta, q.sun.kappa, kEnv);
  const double w = 3.0 * e_sky / e_sun;
  q.sun.w_sun = {w, 0.95 * w, 0.9 * w};
  return q;
}

LMParams diffuse_overcast() {
  LMParams q;
  q.sun_pos = SunPosition::make(0.9, 4.0);
  // Dim enough that even the circumsolar peak stays below the clip level.
  q.sky = {{0.1, 0.105, 0.11}, 6.0};
  return q;
}

FitConfig fast_config() {
  FitConfig cfg;
  cfg.max_iterations = 40;
  cfg.restarts = 1;
  cfg.seed = 3;
  return cfg;
}

double probe_si_rmse(const EnvMap& a, const EnvMap& b) {
  return si_rmse(render_probe(transport(), a), render_probe(transport(), b));
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("config validation") {
  FitConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.max_iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = FitConfig{};
  cfg.restarts = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = FitConfig{};
  cfg.ranges.turbidity = {1.0, 20.0};
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = FitConfig{};
  cfg.weights.sky_render = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  CHECK(std::string(to_string(SunSource::kGridSearch)) == "grid_search");
}

TEST_CASE("objective gradient matches an independent difference quotient") {
  const LMParams q = sunny();
  const EnvMap p = render_envmap(q, kEnv);
  const LMObjective obj(transport(), p, q.sun_pos, FitConfig{});
  Rng rng(21);
  const double h = 2e-3;
  for (int k = 0; k < 10; ++k) {
    std::vector<double> x = obj.to_x(q);
    for (double& xi : x) xi += rng.uniform(-0.6, 0.6);
    obj.project(x);
    // Keep the reference stencil inside the box.
    std::vector<double> lo = x, hi = x;
    for (double& v : lo) v = -1e300;
    for (double& v : hi) v = 1e300;
    obj.project(lo);
    obj.project(hi);
    for (int i = 0; i < LMObjective::kDim; ++i) x[i] = std::clamp(x[i], lo[i] + 3 * h, hi[i] - 3 * h);

    const std::vector<double> g = obj.gradient(x);
    double scale = 0.0;
    std::vector<double> ref(LMObjective::kDim);
    for (int i = 0; i < LMObjective::kDim; ++i) {
      auto at = [&](double d) {
        std::vector<double> y = x;
        y[i] += d;
        return obj.value(y);
      };
      ref[i] = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      scale = std::max(scale, std::abs(ref[i]));
    }
    for (int i = 0; i < LMObjective::kDim; ++i) {
      CAPTURE(k);
      CAPTURE(i);
      CHECK(std::abs(g[i] - ref[i]) <= 1e-3 * std::max(std::abs(ref[i]), 1e-2 * scale));
    }
  }
}

TEST_CASE("parameter vector round trip") {
  const LMParams q = sunny();
  const LMObjective obj(transport(), render_envmap(q, kEnv), q.sun_pos, FitConfig{});
  const LMParams back = obj.to_params(obj.to_x(q));
  CHECK(back.sun.beta == doctest::Approx(q.sun.beta));
  CHECK(back.sun.kappa == doctest::Approx(q.sun.kappa));
  CHECK(back.sky.turbidity == doctest::Approx(q.sky.turbidity));
  CHECK(back.sun.w_sun.r == doctest::Approx(q.sun.w_sun.r));
  CHECK(back.sky.w_sky.b == doctest::Approx(q.sky.w_sky.b));
  CHECK(back.sun_pos == q.sun_pos);
}

TEST_CASE("sunny round trip with a sun hint") {
  const LMParams q = sunny();
  const EnvMap p = render_envmap(q, kEnv);
  const FitResult r = fit_lm_to_hdr(transport(), p, q.sun_pos, fast_config());
  CHECK(r.sun_source == SunSource::kHint);
  CHECK(r.params.sun_pos == q.sun_pos);
  CHECK(probe_si_rmse(render_envmap(r.params, kEnv), p) <= 0.05);
  CHECK(r.history.size() >= 1);
  CHECK(r.history.back() <= r.history.front());
  CHECK(FitConfig{}.ranges.contains(r.params));
}

TEST_CASE("fits are deterministic") {
  const LMParams q = sunny();
  const EnvMap p = render_envmap(q, kEnv);
  FitConfig cfg = fast_config();
  cfg.restarts = 2;
  cfg.max_iterations = 10;
  const FitResult a = fit_lm_to_hdr(transport(), p, q.sun_pos, cfg);
  const FitResult b = fit_lm_to_hdr(transport(), p, q.sun_pos, cfg);
  CHECK(a.params == b.params);
  CHECK(a.history == b.history);
  CHECK(a.objective == b.objective);
  CHECK(a.restart == b.restart);
}

TEST_CASE("fitted parameters respect custom bounds") {
  const LMParams q = sunny();
  FitConfig cfg = fast_config();
  cfg.ranges.beta = {5.0, 20.0};
  cfg.ranges.turbidity = {5.0, 9.0};
  const FitResult r = fit_lm_to_hdr(transport(), render_envmap(q, kEnv), q.sun_pos, cfg);
  CHECK(r.params.sun.beta >= 5.0);
  CHECK(r.params.sun.beta <= 20.0);
  CHECK(r.params.sky.turbidity >= 5.0);
  CHECK(r.params.sky.turbidity <= 9.0);
}

TEST_CASE("zero panorama") {
  const FitResult r = fit_lm_to_hdr(transport(), EnvMap(kEnv), std::nullopt, fast_config());
  CHECK(r.params.sun.w_sun == Rgb{});
  CHECK(r.params.sky.w_sky == Rgb{});
  CHECK(r.losses.lm == 0.0);
  CHECK(r.losses.sky == 0.0);
  CHECK(r.losses.sun == 0.0);
  CHECK(r.objective == 0.0);
}

TEST_CASE("diffuse overcast sky gets a negligible sun") {
  const LMParams q = diffuse_overcast();
  const EnvMap p = render_envmap(q, kEnv);
  REQUIRE(*std::max_element(p.data().begin(), p.data().end()) < 1.0f);
  const FitResult r = fit_lm_to_hdr(transport(), p, q.sun_pos, fast_config());
  const double sun = std::max({r.params.sun.w_sun.r, r.params.sun.w_sun.g, r.params.sun.w_sun.b});
  const double sky = std::max({r.params.sky.w_sky.r, r.params.sky.w_sky.g, r.params.sky.w_sky.b});
  CHECK(sun <= 0.05 * sky);
  CHECK(probe_si_rmse(render_envmap(r.params, kEnv), p) <= 0.05);
}

TEST_CASE("sun source selection") {
  const LMParams q = sunny();
  const EnvMap p = render_envmap(q, kEnv);
  const auto detected = detect_sun_hdr(p);
  REQUIRE(detected.has_value());
  CHECK(sun_angular_error(*detected, q.sun_pos) < 2.0 * kPi / kEnv);
  FitConfig cfg = fast_config();
  cfg.max_iterations = 5;
  CHECK(fit_lm_to_hdr(transport(), p, std::nullopt, cfg).sun_source == SunSource::kDetected);

  const EnvMap dim = render_envmap(diffuse_overcast(), kEnv);
  const FitResult g = fit_lm_to_hdr(transport(), dim, std::nullopt, cfg);
  CHECK(g.sun_source == SunSource::kGridSearch);

  // The grid search finds a moderately bright sun without saturation.
  LMParams soft = sunny();
  soft.sun.w_sun = soft.sun.w_sun * (0.5 / soft.sun.w_sun.r);
  soft.sky.w_sky = soft.sky.w_sky * 0.3;
  const EnvMap soft_map = render_envmap(soft, kEnv);
  CHECK_FALSE(detect_sun_hdr(soft_map).has_value());
  const SunPosition found = grid_search_sun(soft_map);
  CHECK(sun_angular_error(found, soft.sun_pos) < 0.25);
}

TEST_CASE("clipped ldr") {
  const EnvMap p = render_envmap(sunny(), kEnv);
  const EnvMap c = clipped_ldr(p);
  for (std::size_t i = 0; i < c.data().size(); ++i) {
    CHECK(c.data()[i] <= 1.0f);
    CHECK(std::abs(c.data()[i] - std::min(p.data()[i], 1.0f)) <= 0.5f / 255 + 1e-6f);
  }
}

TEST_CASE("sky-only ldr fit") {
  FitConfig cfg = fast_config();
  SUBCASE("pure sky round trip") {
    const LMParams q = diffuse_overcast();
    const EnvMap p = render_envmap(q, kEnv);
    const FitResult r = fit_sky_to_ldr(transport(), ldr_simulate(p, 1.0), q.sun_pos, cfg);
    CHECK(r.params.sun.w_sun == Rgb{});
    CHECK(r.losses.sun == 0.0);
    CHECK(r.losses.lm == r.losses.sky);
    CHECK(probe_si_rmse(render_envmap(r.params, kEnv), p) <= 0.05);
  }
  SUBCASE("uniform grey drives turbidity to the flat end") {
    LdrImage grey(2 * kEnv, kEnv);
    std::fill(grey.data.begin(), grey.data.end(), std::uint8_t{128});
    const FitResult r = fit_sky_to_ldr(transport(), grey, SunPosition::make(0.8, 1.0), cfg);
    CHECK(r.params.sky.turbidity >= 15.0);
  }
  SUBCASE("the sky-only fit cannot explain the sun") {
    const LMParams q = sunny();
    const EnvMap hdr = render_envmap(q, kEnv);
    REQUIRE(detect_sun_hdr(hdr).has_value());
    const FitResult sky = fit_sky_to_ldr(transport(), ldr_simulate(hdr, 1.0), q.sun_pos, cfg);
    const FitResult full = fit_lm_to_hdr(transport(), hdr, q.sun_pos, cfg);
    const RenderLosses sky_on_hdr = lm_render_losses(transport(), hdr, clipped_ldr(hdr), sky.params);
    CHECK(sky_on_hdr.sun > full.losses.sun);
    CHECK(sky_on_hdr.sun > 2.0 * full.losses.sun);
  }
}

TEST_CASE("geometry mismatch") {
  CHECK_THROWS_AS(fit_lm_to_hdr(transport(), EnvMap(8), std::nullopt, fast_config()), DimensionMismatch);
}

TEST_CASE("synthetic skies") {
  const SyntheticSkySpec spec;
  CHECK(synthetic_skies(4, 6) == synthetic_skies(4, 6));
  CHECK(synthetic_sky(4, 2) != synthetic_sky(5, 2));
  for (int i = 0; i < 8; ++i) {
    const LMParams q = synthetic_sky(4, i, spec);
    CHECK_NOTHROW(validate(q));
    if (i % 4 == 3) {
      CHECK(q.sun.w_sun == Rgb{});
      continue;
    }
    const double e_sun = luminance(q.sun.w_sun) * sun_irradiance(q.sun_pos, q.sun.beta, q.sun.kappa, 64);
    const double e_sky = luminance(q.sky.w_sky) * sky_irradiance(q.sun_pos, q.sky.turbidity, 64);
    CHECK(e_sun / e_sky >= spec.ratio_min * 0.7);
    CHECK(e_sun / e_sky <= spec.ratio_max * 1.3);
  }
  // Unit sky at 45 degrees against its analytic scale: a constant unit sky
  // delivers pi, the Perez profile brightens toward the sun.
  const double e = sky_irradiance(SunPosition::make(kPi / 4, 0.0), 2.5, 64);
  CHECK(e > kPi);
  CHECK(e < 3 * kPi);
}

}  // TEST_SUITE
