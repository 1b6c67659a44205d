// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skylm/image.h"
#include "skylm/lm_sky.h"
#include "skylm/transport.h"

namespace skylm {

double rmse(std::span<const float> a, std::span<const float> b);
double rmse(const RenderImage& a, const RenderImage& b);

// RMSE between a and alpha * b with the least-squares alpha = <a,b> / <b,b>.
// Throws InvalidInput when b is identically zero.
double si_rmse(std::span<const float> a, std::span<const float> b);
double si_rmse(const RenderImage& a, const RenderImage& b);

// Great-circle angle between the two sun directions.
double sun_angular_error(const SunPosition& a, const SunPosition& b);

// Fraction of errors <= each threshold. Throws InvalidInput for an empty
// error list.
std::vector<double> cumulative_curve(std::span<const double> errors, std::span<const double> grid);

// --- Shadow softness ---

struct SoftnessConfig {
  // Rows analysed immediately below the sphere's image footprint.
  int band_rows = 5;
  // Histogram of horizontal luminance gradients, each divided by the band's
  // mean luminance, over [-gradient_range, gradient_range].
  int bins = 32;
  double gradient_range = 0.5;
  // Each gradient is spread over the bins with a Gaussian of this width
  // (in bins) so the histogram varies continuously with the render.
  double kernel_sigma_bins = 1.0;
  double eps = 1e-8;
  // KL <= cut_low is sharp (bucket 1), KL > cut_high has no visible shadow
  // (bucket 3), everything else is bucket 2. Chosen from the sweep printed by
  // tools/calibrate_softness: sunless skies all land in [0.91, 0.94] and
  // small suns carrying most of the light stay below 0.15.
  double cut_low = 0.15;
  double cut_high = 0.8;

  // Throws InvalidInput unless cut_low < cut_high and bins >= 8.
  void validate() const;
};

// Per-channel sun scale of the reference sky.
inline constexpr double kSoftnessReferenceSunScale = 1.2e6;

// Reference clear-sky illumination that defines a sharp shadow.
LMParams softness_reference_params(int env_height);

struct SoftnessResult {
  double kl = 0.0;
  int bucket = 1;
};

// Eps-floored, normalized gradient histogram of the shadow band.
std::vector<double> gradient_histogram(const RenderImage& render, const ProbeScene& scene,
                                       const SoftnessConfig& cfg);

int softness_bucket(double kl, const SoftnessConfig& cfg);

// Classifies renders of the standard probe scene against the reference
// render produced with the same transport matrix.
class SoftnessClassifier {
 public:
  SoftnessClassifier(const TransportMatrix& transport, const ProbeScene& scene,
                     SoftnessConfig cfg = {});

  // KL(reference || render) and its bucket. Throws DimensionMismatch when the
  // render size does not match the scene.
  SoftnessResult classify(const RenderImage& render) const;
  // Renders env rotated so that sun_azimuth sits at the centre column, which
  // puts the cast shadow below the sphere, and classifies the result.
  SoftnessResult classify_env(const EnvMap& env, double sun_azimuth) const;

  const RenderImage& reference_render() const { return reference_render_; }
  const std::vector<double>& reference_histogram() const { return reference_histogram_; }
  const SoftnessConfig& config() const { return cfg_; }

 private:
  const TransportMatrix* transport_;
  ProbeScene scene_;
  SoftnessConfig cfg_;
  RenderImage reference_render_;
  std::vector<double> reference_histogram_;
};

// --- Bucketed report ---

struct EvalPair {
  RenderImage ground_truth;
  RenderImage prediction;
  int bucket = 1;
};

struct Quartiles {
  std::size_t count = 0;
  double p25 = 0.0;
  double median = 0.0;
  double p75 = 0.0;
};

// Percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);
Quartiles quartiles(const std::vector<double>& values);

struct BucketReport {
  static constexpr std::array<const char*, 4> kColumns{"1", "2", "3", "all"};
  static constexpr std::array<const char*, 2> kMetrics{"rmse", "si_rmse"};
  // [metric][column]
  std::array<std::array<Quartiles, 4>, 2> cells;

  std::string to_json() const;
  std::string to_text() const;
};

// Throws InvalidInput for an empty list or a bucket outside 1..3.
BucketReport bucketed_report(std::span<const EvalPair> pairs);

}  // namespace skylm
