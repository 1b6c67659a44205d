// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "skylm/errors.h"
#include "skylm/metrics.h"
#include "skylm/random.h"

using namespace skylm;

namespace {

const TransportMatrix& probe_transport() {
  static const TransportMatrix t = build_transport(ProbeScene{}, 64);
  return t;
}

RenderImage filled(int w, int h, float value) {
  RenderImage img(w, h);
  for (float& x : img.data) x = value;
  return img;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("rmse") {
  const std::vector<float> a{1, 2, 3, 4};
  std::vector<float> b = a;
  CHECK(rmse(a, b) == 0.0);
  for (float& x : b) x += 0.5f;
  CHECK(rmse(a, b) == doctest::Approx(0.5));
  CHECK_THROWS_AS(rmse(a, std::vector<float>{1, 2}), DimensionMismatch);
}

TEST_CASE("si_rmse") {
  const std::vector<float> a{1, 2, 3, 4};
  CHECK(si_rmse(a, a) == 0.0);
  const std::vector<float> twice{2, 4, 6, 8};
  CHECK(si_rmse(a, twice) == doctest::Approx(0.0).epsilon(1e-12));
  // Closed form, confirmed by a brute-force scale sweep in the oracle script.
  CHECK(si_rmse(std::vector<float>{1, 0}, std::vector<float>{1, 1}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(si_rmse(a, std::vector<float>(4, 0.0f)), InvalidInput);

  Rng rng(9);
  std::vector<float> x(50), y(50), yc(50);
  for (int i = 0; i < 50; ++i) {
    x[i] = static_cast<float>(rng.uniform());
    y[i] = static_cast<float>(rng.uniform());
  }
  const double base = si_rmse(x, y);
  for (double c : {0.25, 4.0}) {
    for (int i = 0; i < 50; ++i) yc[i] = static_cast<float>(c * y[i]);
    CHECK(std::abs(si_rmse(x, yc) - base) < 1e-7);
  }
}

TEST_CASE("sun angular error") {
  const SunPosition a = SunPosition::make(0.4, 1.0);
  CHECK(sun_angular_error(a, a) == 0.0);
  CHECK(sun_angular_error(SunPosition::make(0.0, 0.0), SunPosition::make(kPi / 2, 2.0)) ==
        doctest::Approx(kPi / 2));
  CHECK(sun_angular_error(SunPosition::make(kPi / 2, 0.5), SunPosition::make(kPi / 2, 0.5 + kPi)) ==
        doctest::Approx(kPi));
}

TEST_CASE("cumulative curve") {
  const std::vector<double> grid{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> zeros(5, 0.0);
  for (double f : cumulative_curve(zeros, grid)) CHECK(f == 1.0);
  const std::vector<double> single{2.0};
  CHECK(cumulative_curve(single, grid) == std::vector<double>{0.0, 0.0, 1.0, 1.0});
  CHECK_THROWS_AS(cumulative_curve(std::vector<double>{}, grid), InvalidInput);
}

TEST_CASE("percentiles") {
  CHECK(percentile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.9) == doctest::Approx(4.6));
  const Quartiles q = quartiles({1.0, 2.0, 3.0, 4.0, 5.0});
  CHECK(q.count == 5);
  CHECK(q.p25 == 2.0);
  CHECK(q.median == 3.0);
  CHECK(q.p75 == 4.0);
  CHECK(quartiles({}).count == 0);
}

TEST_CASE("bucketed report") {
  const RenderImage gt = filled(4, 4, 1.0f);
  std::vector<EvalPair> same{{gt, gt, 1}, {gt, gt, 3}};
  const BucketReport zero = bucketed_report(same);
  CHECK(zero.cells[0][0].median == 0.0);
  CHECK(zero.cells[1][2].median == 0.0);
  CHECK(zero.cells[0][1].count == 0);
  CHECK(zero.cells[0][3].count == 2);

  std::vector<EvalPair> pairs{{gt, filled(4, 4, 1.1f), 1},
                              {gt, filled(4, 4, 1.5f), 2},
                              {gt, filled(4, 4, 3.0f), 3}};
  const BucketReport r = bucketed_report(pairs);
  CHECK(r.cells[0][0].median == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(r.cells[0][1].median == doctest::Approx(0.5));
  CHECK(r.cells[0][2].median == doctest::Approx(2.0));
  CHECK(r.cells[0][3].median == doctest::Approx(0.5));
  CHECK(r.cells[1][2].median == doctest::Approx(0.0).epsilon(1e-6));

  const auto j = nlohmann::ordered_json::parse(r.to_json());
  CHECK(j["columns"] == nlohmann::json::array({"1", "2", "3", "all"}));
  CHECK(j.size() == 3);
  for (const char* m : BucketReport::kMetrics) {
    REQUIRE(j.contains(m));
    CHECK(j[m].size() == 4);
  }
  CHECK(j["rmse"]["2"]["median"].get<double>() == doctest::Approx(0.5));
  const std::string text = r.to_text();
  CHECK(text.find("si_rmse") != std::string::npos);
  CHECK(text.find("all") != std::string::npos);

  pairs[0].bucket = 4;
  CHECK_THROWS_AS(bucketed_report(pairs), InvalidInput);
  CHECK_THROWS_AS(bucketed_report(std::vector<EvalPair>{}), InvalidInput);
}

TEST_CASE("softness config and buckets") {
  SoftnessConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(softness_bucket(0.0, cfg) == 1);
  CHECK(softness_bucket(cfg.cut_low, cfg) == 1);
  CHECK(softness_bucket(0.5 * (cfg.cut_low + cfg.cut_high), cfg) == 2);
  CHECK(softness_bucket(cfg.cut_high + 1e-9, cfg) == 3);
  cfg.cut_low = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("softness classifier") {
  const ProbeScene scene;
  const TransportMatrix& t = probe_transport();
  const SoftnessClassifier cls(t, scene);

  const SoftnessResult self = cls.classify(cls.reference_render());
  CHECK(self.kl == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(self.bucket == 1);

  const std::vector<double>& hist = cls.reference_histogram();
  double total = 0.0;
  for (double p : hist) total += p;
  CHECK(total == doctest::Approx(1.0));
  CHECK(hist.size() == 32);

  LMParams overcast = softness_reference_params(64);
  overcast.sun.w_sun = {};
  const SoftnessResult none = cls.classify_env(render_envmap(overcast, 64), overcast.sun_pos.azimuth);
  CHECK(none.kl > cls.config().cut_high);
  CHECK(none.bucket == 3);

  // Rotating the sun elsewhere and letting classify_env centre it again.
  LMParams turned = softness_reference_params(64);
  turned.sun_pos = SunPosition::make(turned.sun_pos.zenith_angle, 0.4);
  const SoftnessResult rotated = cls.classify_env(render_envmap(turned, 64), 0.4);
  CHECK(rotated.bucket == 1);

  CHECK_THROWS_AS(cls.classify(RenderImage(8, 8)), DimensionMismatch);
}

}  // TEST_SUITE
