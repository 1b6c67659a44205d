// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "skylm/envmap.h"
#include "skylm/errors.h"
#include "skylm/metrics.h"
#include "support.h"

using namespace skylm;

TEST_SUITE("envmap") {

TEST_CASE("equirectangular geometry") {
  const int h = 32, w = 64;
  const Vec3 top = texel_direction(5, 0, w, h);
  CHECK(std::acos(top.y) <= 0.5 * kPi / h + 1e-12);
  CHECK(texel_zenith(h / 2, h) - kPi / 2 == doctest::Approx(0.5 * kPi / h));
  CHECK(texel_azimuth(0, w) == doctest::Approx(kPi / w));
  CHECK_THROWS_AS(texel_direction(w, 0, w, h), InvalidInput);
  for (int v = 0; v < h; v += 3) {
    for (int u = 0; u < w; u += 5) {
      const auto [uu, vv] = direction_to_texel(texel_direction(u, v, w, h), w, h);
      CHECK(uu == u);
      CHECK(vv == v);
    }
  }
}

TEST_CASE("texel solid angles sum to 4 pi") {
  // Midpoint-rule sum at height 64, from tests/oracles/model_constants.py.
  constexpr double kSum64 = 12.567632351660359811;
  double total = 0.0;
  for (int v = 0; v < 64; ++v) total += 128 * texel_solid_angle(v, 128, 64);
  CHECK(total == doctest::Approx(kSum64).epsilon(1e-12));
  CHECK(std::abs(total / (4 * kPi) - 1) < 0.005);
  double prev_err = 1.0;
  for (int h : {8, 16, 32, 64, 128}) {
    double s = 0.0;
    for (int v = 0; v < h; ++v) s += 2 * h * texel_solid_angle(v, 2 * h, h);
    const double err = std::abs(s / (4 * kPi) - 1);
    CHECK(err < prev_err);
    prev_err = err;
  }
}

TEST_CASE("ldr simulation") {
  EnvMap env(4);
  env.at(0, 0, 0) = 2.0f;
  env.at(1, 0, 0) = 0.5f;
  env.at(2, 0, 0) = 0.25f;
  const LdrImage ldr = ldr_simulate(env, 1.0);
  CHECK(ldr.at(0, 0, 0) == 255);
  CHECK(ldr.at(1, 0, 0) == 128);
  CHECK(ldr.at(3, 0, 0) == 0);
  CHECK(ldr_simulate(env, 7.0).at(3, 0, 0) == 0);
  CHECK(ldr_simulate(env, 1.0, false, Rounding::kFloor).at(1, 0, 0) == 127);
  CHECK(ldr_simulate(env, 1.0, true).at(2, 0, 0) ==
        static_cast<int>(std::floor(std::pow(0.25, 1 / 2.2) * 255 + 0.5)));
  CHECK_THROWS_AS(ldr_simulate(env, 0.0), InvalidInput);

  const EnvMap lin = ldr_to_linear(ldr);
  CHECK(lin.at(0, 0, 0) == 1.0f);
  CHECK(lin.at(1, 0, 0) == doctest::Approx(128.0 / 255));
}

TEST_CASE("exposure draws") {
  const ExposureRange range{0.3, 3.0};
  CHECK(draw_exposure(5, range) == draw_exposure(5, range));
  CHECK(draw_exposure(5, range) != draw_exposure(6, range));
  for (std::uint64_t s = 0; s < 100; ++s) {
    const double e = draw_exposure(s, range);
    CHECK(e >= range.min);
    CHECK(e <= range.max);
  }
  CHECK_THROWS_AS(draw_exposure(1, ExposureRange{2.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(draw_exposure(1, ExposureRange{0.0, 1.0}), InvalidInput);
}

TEST_CASE("sun detection") {
  SUBCASE("single disk") {
    const SunPosition truth = SunPosition::make(0.7, 2.4);
    const auto found = detect_sun(testing::sun_disk_panorama(64, truth, 0.06));
    REQUIRE(found.has_value());
    CHECK(sun_angular_error(*found, truth) < kPi / 64);
  }
  SUBCASE("disk straddling the seam") {
    const SunPosition truth = SunPosition::make(1.0, 0.01);
    const auto found = detect_sun(testing::sun_disk_panorama(64, truth, 0.08));
    REQUIRE(found.has_value());
    CHECK(sun_angular_error(*found, truth) < kPi / 64);
  }
  SUBCASE("nothing saturated") {
    LdrImage pano(64, 32);
    std::fill(pano.data.begin(), pano.data.end(), std::uint8_t{200});
    CHECK_FALSE(detect_sun(pano).has_value());
  }
  SUBCASE("largest of two regions wins") {
    LdrImage pano(128, 64);
    auto fill = [&](int u0, int v0, int n) {
      for (int v = v0; v < v0 + n; ++v)
        for (int u = u0; u < u0 + n; ++u)
          for (int c = 0; c < 3; ++c) pano.at(u, v, c) = 255;
    };
    fill(20, 20, 10);  // 100 texels
    fill(90, 20, 3);   // 9 texels, near the same zenith
    const auto found = detect_sun(pano);
    REQUIRE(found.has_value());
    const auto [u, v] = direction_to_texel(found->direction(), 128, 64);
    CHECK(u >= 20);
    CHECK(u < 30);
    CHECK(v >= 20);
    CHECK(v < 30);
  }
  SUBCASE("only the upper half counts") {
    LdrImage pano(64, 32);
    for (int c = 0; c < 3; ++c) pano.at(10, 25, c) = 255;
    CHECK_FALSE(detect_sun(pano).has_value());
  }
  CHECK_THROWS_AS(detect_sun(LdrImage(10, 10)), InvalidInput);
}

TEST_CASE("crops") {
  SUBCASE("constant panorama gives a constant crop") {
    EnvMap env(16);
    for (float& x : env.data()) x = 0.75f;
    const RenderImage crop = extract_crop(env, CropSpec{1.0, 0.1, kPi / 3, 40, 30});
    for (float x : crop.data) CHECK(x == doctest::Approx(0.75f));
  }
  SUBCASE("a bright texel lands at its projected pixel") {
    const int h = 64;
    const CropSpec spec{0.4, 0.2, kPi / 3, 64, 48};
    const int u = 9, v = 27;
    EnvMap env(h);
    for (int c = 0; c < 3; ++c) env.at(u, v, c) = 100.0f;
    const RenderImage crop = extract_crop(env, spec);

    // Forward pinhole projection written out independently.
    const double th = texel_zenith(v, h), ph = texel_azimuth(u, 2 * h);
    const double d[3] = {std::sin(th) * std::cos(ph), std::cos(th), std::sin(th) * std::sin(ph)};
    const double ce = std::cos(spec.elevation), se = std::sin(spec.elevation);
    const double f[3] = {ce * std::cos(spec.azimuth), se, ce * std::sin(spec.azimuth)};
    const double r[3] = {-std::sin(spec.azimuth), 0.0, std::cos(spec.azimuth)};
    const double up[3] = {r[1] * f[2] - r[2] * f[1], r[2] * f[0] - r[0] * f[2],
                          r[0] * f[1] - r[1] * f[0]};
    auto dotp = [](const double* a, const double* b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; };
    const double t = std::tan(spec.fov_horizontal / 2);
    const double px = (dotp(d, r) / dotp(d, f) / t + 1) * spec.width / 2;
    const double py = (1 - dotp(d, up) / dotp(d, f) / (t * spec.height / spec.width)) * spec.height / 2;

    int bx = 0, by = 0;
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        if (crop.at(x, y, 0) > crop.at(bx, by, 0)) bx = x, by = y;
    CHECK(std::abs(bx + 0.5 - px) <= 1.5);
    CHECK(std::abs(by + 0.5 - py) <= 1.5);
  }
  SUBCASE("ldr crop shares the sampling") {
    LdrImage pano(64, 32);
    std::fill(pano.data.begin(), pano.data.end(), std::uint8_t{77});
    const LdrImage crop = extract_crop(pano, CropSpec{2.0, 0.0, kPi / 2, 16, 12});
    for (auto x : crop.data) CHECK(x == 77);
  }
  CHECK_THROWS_AS(validate(CropSpec{0.0, 0.0, 0.0, 10, 10}), InvalidInput);
  CHECK_THROWS_AS(validate(CropSpec{0.0, 0.0, 1.0, 0, 10}), InvalidInput);
}

TEST_CASE("crop sets") {
  const auto a = make_crop_set(1);
  CHECK(a.size() == 7);
  CHECK(a == make_crop_set(1));
  const auto b = make_crop_set(2);
  std::multiset<double> sa, sb;
  for (const auto& s : a) sa.insert(s.azimuth);
  for (const auto& s : b) sb.insert(s.azimuth);
  CHECK(sa != sb);
  for (const auto& s : a) {
    CHECK(s.azimuth >= 0.0);
    CHECK(s.azimuth < kTwoPi);
  }
  CHECK_THROWS_AS(make_crop_set(1, 0), InvalidInput);
}

TEST_CASE("rolls") {
  EnvMap env(8);
  for (std::size_t i = 0; i < env.data().size(); ++i) env.data()[i] = static_cast<float>(i);
  CHECK(roll_columns(roll_columns(env, 5), -5) == env);
  CHECK(roll_columns(env, 16) == env);
  CHECK(roll_columns(env, 3).at(3, 2, 1) == env.at(0, 2, 1));
  const double centred = texel_azimuth(8, 16);
  CHECK(roll_to_center(env, centred) == env);

  const SunPosition sun = SunPosition::make(0.9, 5.1);
  const LdrImage pano = testing::sun_disk_panorama(32, sun, 0.1);
  const auto found = detect_sun(pano);
  REQUIRE(found.has_value());
  const LdrImage rolled = roll_to_center(pano, found->azimuth);
  const auto [su, sv] = direction_to_texel(found->direction(), 64, 32);
  CHECK(rolled.at(32, sv, 0) == 255);
  CHECK(su != 32);
}

}  // TEST_SUITE
