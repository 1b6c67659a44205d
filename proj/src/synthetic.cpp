// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/synthetic.h"

#include <cmath>
#include <string>

#include "skylm/random.h"

namespace skylm {
namespace {

double horizontal_irradiance(const std::vector<float>& shape, int height) {
  const int w = 2 * height;
  double e = 0.0;
  for (int v = 0; v < height / 2; ++v) {
    const double k = std::cos(texel_zenith(v, height)) * texel_solid_angle(v, w, height);
    for (int u = 0; u < w; ++u) e += k * shape[static_cast<std::size_t>(v) * w + u];
  }
  return e;
}

}  // namespace

double sun_irradiance(const SunPosition& sun_pos, double beta, double kappa, int height,
                      const EnvRenderOptions& opts) {
  return horizontal_irradiance(ComponentSampler(sun_pos, height, opts).sun_shape(beta, kappa), height);
}

double sky_irradiance(const SunPosition& sun_pos, double turbidity, int height, const EnvRenderOptions& opts) {
  return horizontal_irradiance(ComponentSampler(sun_pos, height, opts).sky_shape(turbidity), height);
}

LMParams synthetic_sky(std::uint64_t seed, int index, const SyntheticSkySpec& spec) {
  Rng rng(derive_seed(seed, "synthetic/" + std::to_string(index)));
  LMParams q;
  q.sun_pos = SunPosition::make(rng.uniform(spec.zenith_min, spec.zenith_max), rng.uniform(0.0, kTwoPi));
  const double w_sky = rng.uniform(spec.w_sky_min, spec.w_sky_max);
  for (int c = 0; c < 3; ++c) q.sky.w_sky[c] = w_sky * rng.uniform(1.0 - spec.tint, 1.0 + spec.tint);
  q.sky.turbidity = rng.uniform(spec.turbidity_min, spec.turbidity_max);
  q.sun.beta = rng.log_uniform(spec.beta_min, spec.beta_max);
  q.sun.kappa = rng.log_uniform(spec.kappa_min, spec.kappa_max);
  const double ratio = rng.log_uniform(spec.ratio_min, spec.ratio_max);
  Rgb tint;
  for (int c = 0; c < 3; ++c) tint[c] = rng.uniform(1.0 - spec.tint, 1.0 + spec.tint);

  const bool overcast = spec.overcast_period > 0 && index % spec.overcast_period == spec.overcast_period - 1;
  if (!overcast) {
    const double e_sky = w_sky * sky_irradiance(q.sun_pos, q.sky.turbidity, spec.height);
    const double e_sun = sun_irradiance(q.sun_pos, q.sun.beta, q.sun.kappa, spec.height);
    q.sun.w_sun = tint * (ratio * e_sky / e_sun);
  }
  return q;
}

std::vector<LMParams> synthetic_skies(std::uint64_t seed, int count, const SyntheticSkySpec& spec) {
  std::vector<LMParams> out;
  for (int i = 0; i < count; ++i) out.push_back(synthetic_sky(seed, i, spec));
  return out;
}

}  // namespace skylm
