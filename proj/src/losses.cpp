// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/losses.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace skylm {
namespace {

void require_range(const ParamRange& r, const char* name) {
  if (!(r.min < r.max)) {
    std::ostringstream os;
    os << "parameter range for " << name << " needs min < max, got [" << r.min << ", " << r.max << "]";
    throw InvalidInput(os.str());
  }
}

bool inside(double x, const ParamRange& r) { return x >= r.min && x <= r.max; }

}  // namespace

void ParamRanges::validate() const {
  require_range(beta, "beta");
  require_range(kappa, "kappa");
  require_range(turbidity, "turbidity");
  for (const auto& r : w_sun) require_range(r, "w_sun");
  for (const auto& r : w_sky) require_range(r, "w_sky");
}

bool ParamRanges::contains(const LMParams& q) const {
  if (!inside(q.sun.beta, beta) || !inside(q.sun.kappa, kappa) || !inside(q.sky.turbidity, turbidity))
    return false;
  for (int c = 0; c < 3; ++c)
    if (!inside(q.sun.w_sun[c], w_sun[c]) || !inside(q.sky.w_sky[c], w_sky[c])) return false;
  return true;
}

void LossWeights::validate() const {
  for (double w : {beta, kappa, w_sun, turbidity, w_sky, sky_render, sun_render, lm_render})
    if (!(w > 0.0)) throw InvalidInput("loss weights must all be > 0");
}

void SunPosDistribution::validate() const {
  if (p.size() != static_cast<std::size_t>(kSunElevationBins * kSunAzimuthBins))
    throw InvalidInput("sun position distribution must have 16 x 64 entries");
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw InvalidInput("sun position probabilities must be >= 0");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InvalidInput("sun position probabilities must sum to 1");
}

int elevation_bin(double elevation) {
  const int b = static_cast<int>(std::floor(elevation / (kPi / 2) * kSunElevationBins));
  return std::clamp(b, 0, kSunElevationBins - 1);
}

int azimuth_bin(double azimuth) {
  const int b = static_cast<int>(std::floor(wrap_angle(azimuth) / kTwoPi * kSunAzimuthBins));
  return std::clamp(b, 0, kSunAzimuthBins - 1);
}

SunPosition bin_center(int e_bin, int a_bin) {
  const double elevation = (e_bin + 0.5) * (kPi / 2) / kSunElevationBins;
  return SunPosition::make(kPi / 2 - elevation, (a_bin + 0.5) * kTwoPi / kSunAzimuthBins);
}

double pano_l1(const EnvMap& p_star, const EnvMap& p_hat) {
  if (!p_star.same_shape(p_hat)) throw DimensionMismatch("pano_l1: panorama sizes differ");
  const auto a = p_star.data();
  const auto b = p_hat.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(double{a[i]} - double{b[i]});
  return a.empty() ? 0.0 : acc / static_cast<double>(a.size());
}

double elevation_l2(double theta_star, double theta_hat) {
  const double d = theta_star - theta_hat;
  return d * d;
}

double mean_squared_difference(const RenderImage& a, const RenderImage& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("render sizes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = double{a.data[i]} - double{b.data[i]};
    acc += d * d;
  }
  return a.data.empty() ? 0.0 : acc / static_cast<double>(a.data.size());
}

double render_l2(const TransportMatrix& transport, const EnvMap& a, const EnvMap& b) {
  return mean_squared_difference(render_probe(transport, a), render_probe(transport, b));
}

RenderLosses lm_render_losses(const TransportMatrix& transport, const EnvMap& p_hdr,
                              const EnvMap& p_ldr, const LMParams& q, const EnvRenderOptions& opts) {
  if (!p_hdr.same_shape(p_ldr)) throw DimensionMismatch("HDR and LDR panoramas differ in size");
  const RenderImage t_hdr = render_probe(transport, p_hdr);
  const RenderImage t_ldr = render_probe(transport, p_ldr);
  RenderImage sun_target = t_hdr;
  for (std::size_t i = 0; i < sun_target.data.size(); ++i) sun_target.data[i] -= t_ldr.data[i];

  const int h = p_hdr.height();
  RenderLosses out;
  out.sky = mean_squared_difference(t_ldr, render_probe(transport, render_sky_envmap(q, h, opts)));
  out.sun = mean_squared_difference(sun_target, render_probe(transport, render_sun_envmap(q, h, opts)));
  out.lm = mean_squared_difference(t_hdr, render_probe(transport, render_envmap(q, h, opts)));
  return out;
}

double weighted_render_loss(const RenderLosses& l, const LossWeights& w) {
  return w.lm_render * l.lm + w.sky_render * l.sky + w.sun_render * l.sun;
}

double normalize_param(double value, const ParamRange& range) {
  return (value - range.min) / (range.max - range.min);
}

double param_losses(const LMParams& q_hat, const LMParams& q_tilde, const ParamRanges& ranges,
                    const LossWeights& weights) {
  ranges.validate();
  if (!ranges.contains(q_hat) || !ranges.contains(q_tilde))
    throw InvalidInput("param_losses: parameter outside its range");
  const auto sq = [](double x) { return x * x; };
  const auto term = [&](double a, double b, const ParamRange& r) {
    return sq(normalize_param(a, r) - normalize_param(b, r));
  };
  double w_sun = 0.0, w_sky = 0.0;
  for (int c = 0; c < 3; ++c) {
    w_sun += term(q_hat.sun.w_sun[c], q_tilde.sun.w_sun[c], ranges.w_sun[c]);
    w_sky += term(q_hat.sky.w_sky[c], q_tilde.sky.w_sky[c], ranges.w_sky[c]);
  }
  return weights.beta * term(q_hat.sun.beta, q_tilde.sun.beta, ranges.beta) +
         weights.kappa * term(q_hat.sun.kappa, q_tilde.sun.kappa, ranges.kappa) +
         weights.turbidity * term(q_hat.sky.turbidity, q_tilde.sky.turbidity, ranges.turbidity) +
         weights.w_sun * w_sun + weights.w_sky * w_sky;
}

SunPosDistribution bin_sun_position(const SunPosition& sun, double smoothing_sigma) {
  if (!(smoothing_sigma >= 0.0)) throw InvalidInput("smoothing sigma must be >= 0");
  const int e0 = elevation_bin(sun.elevation());
  const int a0 = azimuth_bin(sun.azimuth);
  SunPosDistribution d;
  if (smoothing_sigma == 0.0) {
    d.at(e0, a0) = 1.0;
    return d;
  }
  double sum = 0.0;
  for (int e = 0; e < kSunElevationBins; ++e) {
    for (int a = 0; a < kSunAzimuthBins; ++a) {
      int da = std::abs(a - a0);
      da = std::min(da, kSunAzimuthBins - da);
      const double de = e - e0;
      const double v = std::exp(-(de * de + double(da) * da) / (2.0 * smoothing_sigma * smoothing_sigma));
      d.at(e, a) = v;
      sum += v;
    }
  }
  for (double& x : d.p) x /= sum;
  return d;
}

double kl_divergence(std::span<const double> target, std::span<const double> pred, double eps) {
  if (target.size() != pred.size()) throw DimensionMismatch("kl_divergence: sizes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] <= 0.0) continue;
    acc += target[i] * std::log(target[i] / std::max(pred[i], eps));
  }
  return std::max(acc, 0.0);
}

double kl_divergence(const SunPosDistribution& target, const SunPosDistribution& pred, double eps) {
  return kl_divergence(std::span<const double>(target.p), std::span<const double>(pred.p), eps);
}

}  // namespace skylm
