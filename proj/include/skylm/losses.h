// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

// Losses over panoramas, probe renders and LM parameter vectors. All image
// losses are means over pixels and channels so that their values do not
// depend on resolution.

#pragma once

#include <array>
#include <span>
#include <vector>

#include "skylm/image.h"
#include "skylm/lm_sky.h"
#include "skylm/transport.h"

namespace skylm {

struct ParamRange {
  double min;
  double max;
  bool operator==(const ParamRange&) const = default;
};

// Per-parameter bounds used for [0, 1] normalization and as fitting bounds.
struct ParamRanges {
  ParamRange beta{0.0, 200.0};
  ParamRange kappa{0.001, 2.0};
  ParamRange turbidity{kTurbidityMin, kTurbidityMax};
  std::array<ParamRange, 3> w_sun{{{0.0, 1e7}, {0.0, 1e7}, {0.0, 1e7}}};
  std::array<ParamRange, 3> w_sky{{{0.0, 50.0}, {0.0, 50.0}, {0.0, 50.0}}};

  // Throws InvalidInput unless min < max for every entry.
  void validate() const;
  bool contains(const LMParams& q) const;
  bool operator==(const ParamRanges&) const = default;
};

struct LossWeights {
  double beta = 10.0;
  double kappa = 5.0;
  double w_sun = 10.0;
  double turbidity = 1.0;
  double w_sky = 1.0;
  double sky_render = 0.2;
  double sun_render = 1.0;
  double lm_render = 1.0;

  // Throws InvalidInput unless every weight is > 0.
  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

inline constexpr int kSunElevationBins = 16;
inline constexpr int kSunAzimuthBins = 64;

// Probability grid over sun elevation [0, pi/2] (rows) x azimuth [0, 2 pi)
// (columns).
struct SunPosDistribution {
  std::vector<double> p = std::vector<double>(kSunElevationBins * kSunAzimuthBins, 0.0);

  double& at(int elevation_bin, int azimuth_bin) { return p[elevation_bin * kSunAzimuthBins + azimuth_bin]; }
  double at(int elevation_bin, int azimuth_bin) const {
    return p[elevation_bin * kSunAzimuthBins + azimuth_bin];
  }
  // Throws InvalidInput unless entries are >= 0 and sum to 1 within 1e-6.
  void validate() const;
};

int elevation_bin(double elevation);
int azimuth_bin(double azimuth);
// Sun position at the centre of a bin.
SunPosition bin_center(int elevation_bin, int azimuth_bin);

// Mean absolute per-channel difference. Throws DimensionMismatch.
double pano_l1(const EnvMap& p_star, const EnvMap& p_hat);
double elevation_l2(double theta_star, double theta_hat);

double mean_squared_difference(const RenderImage& a, const RenderImage& b);
// Mean squared difference of the two probe renders T a and T b.
double render_l2(const TransportMatrix& transport, const EnvMap& a, const EnvMap& b);

struct RenderLosses {
  double sky = 0.0;
  double sun = 0.0;
  double lm = 0.0;
};

// Sky, sun and full-model render losses:
//   sky = |T P_ldr - T f_sky(q)|^2,  sun = |T (P_hdr - P_ldr) - T f_sun(q)|^2,
//   lm  = |T P_hdr - T f_LM(q)|^2
// with the model maps rasterized at p_hdr's resolution.
RenderLosses lm_render_losses(const TransportMatrix& transport, const EnvMap& p_hdr,
                              const EnvMap& p_ldr, const LMParams& q,
                              const EnvRenderOptions& opts = {});

// Weighted sum of the component losses.
double weighted_render_loss(const RenderLosses& losses, const LossWeights& weights);

double normalize_param(double value, const ParamRange& range);

// Sum of weighted squared differences of [0, 1]-normalized beta, kappa,
// turbidity, w_sun and w_sky. Sun position does not enter. Throws
// InvalidInput when a parameter lies outside its range.
double param_losses(const LMParams& q_hat, const LMParams& q_tilde, const ParamRanges& ranges,
                    const LossWeights& weights);

// Gaussian bump (sigma in bins, wrapping in azimuth) at the sun's bin,
// normalized to sum 1. sigma = 0 gives a one-hot grid.
SunPosDistribution bin_sun_position(const SunPosition& sun, double smoothing_sigma = 1.0);

// sum target * log(target / max(pred, eps)) over entries with target > 0.
double kl_divergence(std::span<const double> target, std::span<const double> pred,
                     double eps = 1e-12);
double kl_divergence(const SunPosDistribution& target, const SunPosDistribution& pred,
                     double eps = 1e-12);

}  // namespace skylm
