// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

// Lalonde-Matthews sun and sky radiance model.
//
// The model is the sum of a sun lobe
//
//   f_sun(l) = w_sun * exp(-beta * exp(-kappa / gamma))
//
// and a sky term w_sky * f_P, where f_P is the Perez luminance distribution
// with Preetham's turbidity-linear coefficients, normalized so that the
// zenith value is exactly 1. gamma is the angle between l and the sun.
// Radiance below the horizon is zero.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skylm/image.h"
#include "skylm/vec.h"

namespace skylm {

inline constexpr double kTurbidityMin = 1.7;
inline constexpr double kTurbidityMax = 20.0;

// Clamp applied to gamma inside the sun lobe's kappa / gamma term.
inline constexpr double kGammaEpsilon = 1e-6;
// Clamp applied to cos(theta) in the Perez gradation term near the horizon.
inline constexpr double kCosEpsilon = 1e-6;

struct SunPosition {
  double zenith_angle = 0.0;  // [0, pi/2]
  double azimuth = 0.0;       // [0, 2 pi)

  // Validates the zenith range and wraps the azimuth.
  static SunPosition make(double zenith_angle, double azimuth);

  Vec3 direction() const { return spherical_direction(zenith_angle, azimuth); }
  double elevation() const { return kPi / 2 - zenith_angle; }
  bool operator==(const SunPosition&) const = default;
};

struct SunParams {
  Rgb w_sun;
  double beta = 0.0;
  double kappa = 1.0;
  bool operator==(const SunParams&) const = default;
};

struct SkyParams {
  Rgb w_sky;
  double turbidity = 3.0;
  bool operator==(const SkyParams&) const = default;
};

struct LMParams {
  SunPosition sun_pos;
  SunParams sun;
  SkyParams sky;
  bool operator==(const LMParams&) const = default;
};

struct TurbidityRange {
  double min = kTurbidityMin;
  double max = kTurbidityMax;
};

// Throw InvalidInput when a component invariant is violated.
void validate(const SunParams& sun);
void validate(const SkyParams& sky, const TurbidityRange& range = {});
void validate(const LMParams& params, const TurbidityRange& range = {});

// Angle in [0, pi] between a unit direction and the sun. Throws InvalidInput
// when |direction| differs from 1 by more than 1e-6.
double angle_to_sun(const Vec3& direction, const SunPosition& sun_pos);

// Scalar sun lobe exp(-beta * exp(-kappa / gamma)); exactly 1 at gamma = 0.
double sun_shape(double gamma_sun, double beta, double kappa);
Rgb eval_sun(double gamma_sun, const SunParams& sun);

struct PerezCoefficients {
  double a, b, c, d, e;
};
// Luminance (Y) channel coefficients as linear functions of turbidity.
PerezCoefficients perez_luminance_coefficients(double turbidity);

// F(theta, gamma) / F(0, sun_zenith), or 0 below the horizon. Throws
// InvalidInput when the turbidity is outside the range.
double perez_ratio(double zenith_angle, double gamma_sun, double sun_zenith, double turbidity,
                   const TurbidityRange& range = {});

Rgb eval_sky(const Vec3& direction, const SkyParams& sky, const SunPosition& sun_pos);
Rgb eval_lm(const Vec3& direction, const LMParams& params);

// Controls how the sun lobe is integrated over texels. Texels whose centre
// lies within sun_region_texels texel heights of the sun are averaged over a
// sun_supersampling x sun_supersampling grid (solid-angle weighted); all
// other texels, and the sky term everywhere, are sampled at the texel centre.
// sun_supersampling = 1 gives plain centre sampling.
struct EnvRenderOptions {
  int sun_supersampling = 32;
  double sun_region_texels = 3.0;
};

// Precomputed per-texel sample geometry for one sun position and map size,
// so the two model components can be re-evaluated cheaply for new shape
// parameters. render_envmap goes through this class too, which keeps fitted
// and synthesized maps numerically identical.
class ComponentSampler {
 public:
  ComponentSampler(const SunPosition& sun_pos, int height, const EnvRenderOptions& opts = {});

  int height() const { return height_; }
  int width() const { return 2 * height_; }
  std::size_t texel_count() const { return static_cast<std::size_t>(width()) * height_; }
  const SunPosition& sun_position() const { return sun_pos_; }

  // Per-texel Perez ratio (one float per texel, zero below the horizon).
  void sky_shape(double turbidity, std::span<float> out) const;
  // Per-texel sun lobe shape (one float per texel, zero below the horizon).
  void sun_shape(double beta, double kappa, std::span<float> out) const;

  std::vector<float> sky_shape(double turbidity) const;
  std::vector<float> sun_shape(double beta, double kappa) const;

 private:
  struct DenseTexel {
    std::uint32_t texel;
    std::uint32_t first;
  };

  SunPosition sun_pos_;
  int height_;
  int samples_per_dense_texel_;
  std::vector<float> zenith_;  // per upper-hemisphere texel centre
  std::vector<float> gamma_;   // per upper-hemisphere texel centre
  std::vector<DenseTexel> dense_;
  std::vector<double> dense_gamma_;
  std::vector<double> dense_weight_;  // normalized per texel
};

// Combine component shapes into an RGB map: w_sky * sky + w_sun * sun.
EnvMap compose_envmap(int height, const Rgb& w_sky, std::span<const float> sky, const Rgb& w_sun,
                      std::span<const float> sun);

// Equirectangular map of size height x 2 height holding the model radiance.
// Throws InvalidInput unless height >= 4 and even.
EnvMap render_envmap(const LMParams& params, int height, const EnvRenderOptions& opts = {});
EnvMap render_sky_envmap(const LMParams& params, int height, const EnvRenderOptions& opts = {});
EnvMap render_sun_envmap(const LMParams& params, int height, const EnvRenderOptions& opts = {});

}  // namespace skylm
