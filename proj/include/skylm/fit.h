// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

// Recovering LM parameters from panoramas by minimizing probe-render losses.
//
// The objective is evaluated through the transport matrix. Sun position is
// never optimized: it comes from a hint, from the saturated region of the
// clipped panorama, or, failing both, from a coarse grid search. The
// remaining parameters are optimized with a bounded Levenberg-Marquardt
// iteration in log space using central-difference Jacobians.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "skylm/image.h"
#include "skylm/lm_sky.h"
#include "skylm/losses.h"
#include "skylm/transport.h"

namespace skylm {

struct FitConfig {
  int max_iterations = 60;
  // Stop once an accepted step lowers the loss by less than this fraction.
  double tolerance = 1e-6;
  // Number of starts, the first from the deterministic initialization.
  int restarts = 2;
  std::uint64_t seed = 0;
  // Standard deviation of restart perturbations in log space.
  double restart_sigma = 0.5;
  // Step of the central differences in log space.
  double gradient_step = 1e-4;
  LossWeights weights;
  ParamRanges ranges;
  EnvRenderOptions render;

  // Throws InvalidInput on max_iterations < 1, tolerance <= 0, restarts < 1
  // or invalid weights and ranges.
  void validate() const;
};

enum class SunSource { kHint, kDetected, kGridSearch };

const char* to_string(SunSource source);

struct FitLosses {
  double sky = 0.0;
  double sun = 0.0;
  double lm = 0.0;
  double pano_l1 = 0.0;
};

struct FitResult {
  LMParams params;
  FitLosses losses;
  // Weighted objective of the winning start, as seen by the optimizer.
  double objective = 0.0;
  int iterations = 0;
  int restart = 0;
  bool converged = false;
  SunSource sun_source = SunSource::kHint;
  // Accepted objective values of the winning start, first entry = start.
  std::vector<double> history;
};

// Full LM fit to an HDR panorama. Losses are recomputed from the returned
// parameters with lm_render_losses and pano_l1 against the clipped (exposure
// 1, linear) LDR version of p_hdr. Throws DimensionMismatch when the
// transport was built for another panorama size.
FitResult fit_lm_to_hdr(const TransportMatrix& transport, const EnvMap& p_hdr,
                        const std::optional<SunPosition>& sun_hint, const FitConfig& cfg);

// Sky-only fit (w_sky and turbidity) to the linearized LDR panorama. The sun
// weights of the result are zero. Losses are lm_render_losses with the LDR
// panorama as both targets, so sun is 0 and lm equals sky.
FitResult fit_sky_to_ldr(const TransportMatrix& transport, const LdrImage& p_ldr,
                         const SunPosition& sun_pos, const FitConfig& cfg);

// Clipped, quantized, linear LDR version of an HDR panorama at exposure 1.
EnvMap clipped_ldr(const EnvMap& p_hdr);

// Sun position from the largest saturated region of clipped_ldr(p_hdr).
std::optional<SunPosition> detect_sun_hdr(const EnvMap& p_hdr);

// Best sun position among the 16 x 64 bin centres, scored by the solid-angle
// weighted texel error of a least-squares LM fit with fixed shape parameters.
SunPosition grid_search_sun(const EnvMap& p_hdr, const EnvRenderOptions& opts = {});

// The LM objective as a function of the 9 log-space parameters
// [log w_sky (3), log t, log w_sun (3), log beta, log kappa] for a fixed
// panorama and sun position. Exposed for gradient checks.
class LMObjective {
 public:
  static constexpr int kDim = 9;

  LMObjective(const TransportMatrix& transport, const EnvMap& p_hdr, const SunPosition& sun_pos,
              const FitConfig& cfg);

  std::vector<double> to_x(const LMParams& q) const;
  LMParams to_params(const std::vector<double>& x) const;
  // Clamps x into the log-space box derived from the parameter ranges.
  void project(std::vector<double>& x) const;

  // Weighted render loss lm + sky_render * sky + sun_render * sun.
  double value(const std::vector<double>& x) const;
  // Central-difference gradient of value() with step cfg.gradient_step.
  std::vector<double> gradient(const std::vector<double>& x) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

}  // namespace skylm
