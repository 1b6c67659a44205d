// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/lm_sky.h"

#include <cmath>
#include <sstream>

namespace skylm {
namespace {

void require_channels_nonnegative(const Rgb& c, const char* name) {
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(c[i]) || c[i] < 0.0) {
      std::ostringstream os;
      os << name << " channel " << i << " must be finite and >= 0, got " << c[i];
      throw InvalidInput(os.str());
    }
  }
}

void require_turbidity(double t, const TurbidityRange& range) {
  if (!(t >= range.min && t <= range.max)) {
    std::ostringstream os;
    os << "turbidity " << t << " outside [" << range.min << ", " << range.max << "]";
    throw InvalidInput(os.str());
  }
}

double perez_f(double cos_theta, double gamma, const PerezCoefficients& k) {
  const double cg = std::cos(gamma);
  return (1.0 + k.a * std::exp(k.b / std::max(cos_theta, kCosEpsilon))) *
         (1.0 + k.c * std::exp(k.d * gamma) + k.e * cg * cg);
}

double angle_between_unit(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

void require_height(int height) {
  if (height < 4 || height % 2 != 0) {
    std::ostringstream os;
    os << "environment map height must be even and >= 4, got " << height;
    throw InvalidInput(os.str());
  }
}

}  // namespace

SunPosition SunPosition::make(double zenith_angle, double azimuth) {
  if (!std::isfinite(zenith_angle) || zenith_angle < 0.0 || zenith_angle > kPi / 2) {
    std::ostringstream os;
    os << "sun zenith angle " << zenith_angle << " outside [0, pi/2]";
    throw InvalidInput(os.str());
  }
  if (!std::isfinite(azimuth)) throw InvalidInput("sun azimuth must be finite");
  return {zenith_angle, wrap_angle(azimuth)};
}

void validate(const SunParams& sun) {
  require_channels_nonnegative(sun.w_sun, "w_sun");
  if (!std::isfinite(sun.beta) || sun.beta < 0.0) throw InvalidInput("beta must be finite and >= 0");
  if (!std::isfinite(sun.kappa) || sun.kappa <= 0.0) throw InvalidInput("kappa must be finite and > 0");
}

void validate(const SkyParams& sky, const TurbidityRange& range) {
  require_channels_nonnegative(sky.w_sky, "w_sky");
  require_turbidity(sky.turbidity, range);
}

void validate(const LMParams& params, const TurbidityRange& range) {
  SunPosition::make(params.sun_pos.zenith_angle, params.sun_pos.azimuth);
  if (params.sun_pos.azimuth < 0.0 || params.sun_pos.azimuth >= kTwoPi)
    throw InvalidInput("sun azimuth must lie in [0, 2 pi)");
  validate(params.sun);
  validate(params.sky, range);
}

double angle_to_sun(const Vec3& direction, const SunPosition& sun_pos) {
  const double norm = length(direction);
  if (!(std::abs(norm - 1.0) <= 1e-6)) {
    std::ostringstream os;
    os << "direction must be unit length, |d| = " << norm;
    throw InvalidInput(os.str());
  }
  return angle_between_unit(direction, sun_pos.direction());
}

double sun_shape(double gamma_sun, double beta, double kappa) {
  if (gamma_sun <= 0.0) return 1.0;
  return std::exp(-beta * std::exp(-kappa / std::max(gamma_sun, kGammaEpsilon)));
}

Rgb eval_sun(double gamma_sun, const SunParams& sun) {
  if (gamma_sun == 0.0) return sun.w_sun;
  return sun.w_sun * sun_shape(gamma_sun, sun.beta, sun.kappa);
}

PerezCoefficients perez_luminance_coefficients(double t) {
  return {0.1787 * t - 1.4630, -0.3554 * t + 0.4275, -0.0227 * t + 5.3251, 0.1206 * t - 2.5771,
          -0.0670 * t + 0.3703};
}

double perez_ratio(double zenith_angle, double gamma_sun, double sun_zenith, double turbidity,
                   const TurbidityRange& range) {
  require_turbidity(turbidity, range);
  if (zenith_angle > kPi / 2) return 0.0;
  const PerezCoefficients k = perez_luminance_coefficients(turbidity);
  return perez_f(std::cos(zenith_angle), gamma_sun, k) / perez_f(1.0, sun_zenith, k);
}

Rgb eval_sky(const Vec3& direction, const SkyParams& sky, const SunPosition& sun_pos) {
  const double zenith = std::acos(std::clamp(direction.y, -1.0, 1.0));
  // Straight up, the angle to the sun is the sun's zenith angle by definition;
  // taking it from there keeps the zenith value exactly w_sky.
  const double gamma = zenith == 0.0 ? sun_pos.zenith_angle : angle_to_sun(direction, sun_pos);
  return sky.w_sky * perez_ratio(zenith, gamma, sun_pos.zenith_angle, sky.turbidity);
}

Rgb eval_lm(const Vec3& direction, const LMParams& params) {
  const double gamma = angle_to_sun(direction, params.sun_pos);
  if (direction.y < 0.0) return {};
  return eval_sun(gamma, params.sun) + eval_sky(direction, params.sky, params.sun_pos);
}

ComponentSampler::ComponentSampler(const SunPosition& sun_pos, int height,
                                   const EnvRenderOptions& opts)
    : sun_pos_(sun_pos), height_(height) {
  require_height(height);
  if (opts.sun_supersampling < 1) throw InvalidInput("sun_supersampling must be >= 1");
  const int w = width();
  const int upper_rows = height / 2;
  const Vec3 sun_dir = sun_pos.direction();
  const int ss = opts.sun_supersampling;
  samples_per_dense_texel_ = ss * ss;
  const double dense_radius = opts.sun_region_texels * kPi / height;
  const double d_theta = kPi / height;
  const double d_phi = kTwoPi / w;

  zenith_.resize(static_cast<std::size_t>(upper_rows) * w);
  gamma_.resize(zenith_.size());
  for (int v = 0; v < upper_rows; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      const double theta = texel_zenith(v, height);
      const double gamma = angle_between_unit(spherical_direction(theta, texel_azimuth(u, w)), sun_dir);
      zenith_[i] = static_cast<float>(theta);
      gamma_[i] = static_cast<float>(gamma);
      if (ss == 1 || gamma > dense_radius) continue;

      dense_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(dense_gamma_.size())});
      double weight_sum = 0.0;
      const std::size_t first = dense_gamma_.size();
      for (int a = 0; a < ss; ++a) {
        const double th = v * d_theta + (a + 0.5) * d_theta / ss;
        const double wgt = std::sin(th);
        for (int b = 0; b < ss; ++b) {
          const double ph = u * d_phi + (b + 0.5) * d_phi / ss;
          dense_gamma_.push_back(angle_between_unit(spherical_direction(th, ph), sun_dir));
          dense_weight_.push_back(wgt);
          weight_sum += wgt;
        }
      }
      for (std::size_t k = first; k < dense_weight_.size(); ++k) dense_weight_[k] /= weight_sum;
    }
  }
}

void ComponentSampler::sky_shape(double turbidity, std::span<float> out) const {
  require_turbidity(turbidity, {});
  if (out.size() != texel_count()) throw DimensionMismatch("sky_shape output has wrong size");
  const PerezCoefficients k = perez_luminance_coefficients(turbidity);
  const double f0 = perez_f(1.0, sun_pos_.zenith_angle, k);
  std::fill(out.begin(), out.end(), 0.0f);
  for (std::size_t i = 0; i < zenith_.size(); ++i)
    out[i] = static_cast<float>(perez_f(std::cos(double{zenith_[i]}), gamma_[i], k) / f0);
}

void ComponentSampler::sun_shape(double beta, double kappa, std::span<float> out) const {
  if (out.size() != texel_count()) throw DimensionMismatch("sun_shape output has wrong size");
  std::fill(out.begin(), out.end(), 0.0f);
  for (std::size_t i = 0; i < gamma_.size(); ++i)
    out[i] = static_cast<float>(skylm::sun_shape(gamma_[i], beta, kappa));
  const std::size_t n = static_cast<std::size_t>(samples_per_dense_texel_);
  for (const DenseTexel& d : dense_) {
    double acc = 0.0;
    for (std::size_t k = d.first; k < d.first + n; ++k)
      acc += dense_weight_[k] * skylm::sun_shape(dense_gamma_[k], beta, kappa);
    out[d.texel] = static_cast<float>(acc);
  }
}

std::vector<float> ComponentSampler::sky_shape(double turbidity) const {
  std::vector<float> out(texel_count());
  sky_shape(turbidity, out);
  return out;
}

std::vector<float> ComponentSampler::sun_shape(double beta, double kappa) const {
  std::vector<float> out(texel_count());
  sun_shape(beta, kappa, out);
  return out;
}

EnvMap compose_envmap(int height, const Rgb& w_sky, std::span<const float> sky, const Rgb& w_sun,
                      std::span<const float> sun) {
  EnvMap env(height);
  const std::size_t n = env.texel_count();
  if (sky.size() != n || sun.size() != n) throw DimensionMismatch("component maps have wrong size");
  std::span<float> out = env.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c)
      out[3 * i + c] = static_cast<float>(w_sky[c] * sky[i] + w_sun[c] * sun[i]);
  }
  return env;
}

EnvMap render_envmap(const LMParams& params, int height, const EnvRenderOptions& opts) {
  validate(params);
  require_height(height);
  const ComponentSampler sampler(params.sun_pos, height, opts);
  return compose_envmap(height, params.sky.w_sky, sampler.sky_shape(params.sky.turbidity),
                        params.sun.w_sun, sampler.sun_shape(params.sun.beta, params.sun.kappa));
}

EnvMap render_sky_envmap(const LMParams& params, int height, const EnvRenderOptions& opts) {
  LMParams sky_only = params;
  sky_only.sun.w_sun = {};
  return render_envmap(sky_only, height, opts);
}

EnvMap render_sun_envmap(const LMParams& params, int height, const EnvRenderOptions& opts) {
  LMParams sun_only = params;
  sun_only.sky.w_sky = {};
  return render_envmap(sun_only, height, opts);
}

}  // namespace skylm
