// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

// Seeded random LM skies for round-trip experiments and tests.

#pragma once

#include <cstdint>
#include <vector>

#include "skylm/lm_sky.h"

namespace skylm {

// Irradiance on an upward-facing surface from the unit-weight sun lobe,
// integrated over the equirectangular grid of the given height.
double sun_irradiance(const SunPosition& sun_pos, double beta, double kappa, int height,
                      const EnvRenderOptions& opts = {});
// Same for the unit-weight sky term.
double sky_irradiance(const SunPosition& sun_pos, double turbidity, int height,
                      const EnvRenderOptions& opts = {});

struct SyntheticSkySpec {
  double zenith_min = kPi / 6;
  double zenith_max = kPi / 3;
  double w_sky_min = 0.1;
  double w_sky_max = 0.6;
  // Per-channel multiplicative tint around 1.
  double tint = 0.15;
  double turbidity_min = 2.0;
  double turbidity_max = 8.0;
  double beta_min = 10.0;
  double beta_max = 150.0;
  double kappa_min = 0.01;
  double kappa_max = 0.3;
  // Ratio of sun to sky irradiance for sunny skies.
  double ratio_min = 0.5;
  double ratio_max = 10.0;
  // Every overcast_period-th sky (index % period == period - 1) has no sun.
  int overcast_period = 4;
  int height = 64;
};

// Sky number `index` of the seeded set. Sun weights are chosen so that the
// sun delivers the drawn irradiance ratio.
LMParams synthetic_sky(std::uint64_t seed, int index, const SyntheticSkySpec& spec = {});
std::vector<LMParams> synthetic_skies(std::uint64_t seed, int count, const SyntheticSkySpec& spec = {});

}  // namespace skylm
