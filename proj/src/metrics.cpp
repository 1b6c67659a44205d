// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "skylm/envmap.h"
#include "skylm/losses.h"

namespace skylm {
namespace {

void require_same_size(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DimensionMismatch("metric inputs differ in size");
  if (a.empty()) throw InvalidInput("metric inputs are empty");
}

}  // namespace

double rmse(std::span<const float> a, std::span<const float> b) {
  require_same_size(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double{a[i]} - double{b[i]};
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

double rmse(const RenderImage& a, const RenderImage& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("rmse: render sizes differ");
  return rmse(std::span<const float>(a.data), std::span<const float>(b.data));
}

double si_rmse(std::span<const float> a, std::span<const float> b) {
  require_same_size(a, b);
  double ab = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double{a[i]} * b[i];
    bb += double{b[i]} * b[i];
  }
  if (bb == 0.0) throw InvalidInput("si_rmse: second image is identically zero, scale undefined");
  const double alpha = ab / bb;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double{a[i]} - alpha * b[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

double si_rmse(const RenderImage& a, const RenderImage& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("si_rmse: render sizes differ");
  return si_rmse(std::span<const float>(a.data), std::span<const float>(b.data));
}

double sun_angular_error(const SunPosition& a, const SunPosition& b) {
  const Vec3 da = a.direction();
  const Vec3 db = b.direction();
  // atan2 form stays accurate for nearly parallel and nearly opposite vectors.
  return std::atan2(length(cross(da, db)), dot(da, db));
}

std::vector<double> cumulative_curve(std::span<const double> errors, std::span<const double> grid) {
  if (errors.empty()) throw InvalidInput("cumulative_curve: no errors given");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) {
    const auto n = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    out.push_back(static_cast<double>(n) / static_cast<double>(sorted.size()));
  }
  return out;
}

void SoftnessConfig::validate() const {
  if (!(cut_low < cut_high)) throw InvalidInput("softness cut points need cut_low < cut_high");
  if (bins < 8) throw InvalidInput("softness histogram needs at least 8 bins");
  if (band_rows < 1) throw InvalidInput("softness band needs at least one row");
  if (!(gradient_range > 0.0) || !(kernel_sigma_bins > 0.0) || !(eps > 0.0))
    throw InvalidInput("softness range, kernel width and eps must be positive");
}

LMParams softness_reference_params(int env_height) {
  LMParams q;
  q.sun_pos = SunPosition::make(kPi / 4, texel_azimuth(env_height, 2 * env_height));
  q.sun = {{kSoftnessReferenceSunScale, kSoftnessReferenceSunScale, kSoftnessReferenceSunScale}, 120.0, 0.02};
  q.sky = {{1.0, 1.0, 1.0}, 2.5};
  return q;
}

std::vector<double> gradient_histogram(const RenderImage& render, const ProbeScene& scene,
                                       const SoftnessConfig& cfg) {
  cfg.validate();
  if (render.width != scene.render_width || render.height != scene.render_height)
    throw DimensionMismatch("softness: render size does not match the probe scene");
  const int first = scene.footprint_last_row() + 1;
  const int last = std::min(first + cfg.band_rows, render.height);
  if (first >= last || render.width < 3) throw InvalidInput("softness: no rows below the sphere");

  const auto lum = [&](int x, int y) {
    return luminance({render.at(x, y, 0), render.at(x, y, 1), render.at(x, y, 2)});
  };
  double mean = 0.0;
  for (int y = first; y < last; ++y)
    for (int x = 0; x < render.width; ++x) mean += lum(x, y);
  mean /= static_cast<double>((last - first) * render.width);

  std::vector<double> hist(cfg.bins, 0.0);
  std::vector<double> kernel(cfg.bins);
  const double bin_width = 2.0 * cfg.gradient_range / cfg.bins;
  const double sigma = cfg.kernel_sigma_bins * bin_width;
  for (int y = first; y < last; ++y) {
    for (int x = 1; x + 1 < render.width; ++x) {
      double g = mean > 0.0 ? 0.5 * (lum(x + 1, y) - lum(x - 1, y)) / mean : 0.0;
      g = std::clamp(g, -cfg.gradient_range, cfg.gradient_range);
      double total = 0.0;
      for (int b = 0; b < cfg.bins; ++b) {
        const double d = (-cfg.gradient_range + (b + 0.5) * bin_width - g) / sigma;
        kernel[b] = std::exp(-0.5 * d * d);
        total += kernel[b];
      }
      for (int b = 0; b < cfg.bins; ++b) hist[b] += kernel[b] / total;
    }
  }
  double sum = 0.0;
  for (double& h : hist) {
    h = std::max(h, cfg.eps);
    sum += h;
  }
  for (double& h : hist) h /= sum;
  return hist;
}

int softness_bucket(double kl, const SoftnessConfig& cfg) {
  if (kl <= cfg.cut_low) return 1;
  if (kl > cfg.cut_high) return 3;
  return 2;
}

SoftnessClassifier::SoftnessClassifier(const TransportMatrix& transport, const ProbeScene& scene,
                                       SoftnessConfig cfg)
    : transport_(&transport), scene_(scene), cfg_(cfg) {
  cfg_.validate();
  if (transport.render_width() != scene.render_width || transport.render_height() != scene.render_height)
    throw DimensionMismatch("softness: transport does not match the probe scene");
  reference_render_ =
      render_probe(transport, render_envmap(softness_reference_params(transport.env_height()),
                                            transport.env_height()));
  reference_histogram_ = gradient_histogram(reference_render_, scene_, cfg_);
}

SoftnessResult SoftnessClassifier::classify(const RenderImage& render) const {
  const std::vector<double> hist = gradient_histogram(render, scene_, cfg_);
  const double kl = kl_divergence(reference_histogram_, hist, cfg_.eps);
  return {kl, softness_bucket(kl, cfg_)};
}

SoftnessResult SoftnessClassifier::classify_env(const EnvMap& env, double sun_azimuth) const {
  return classify(render_probe(*transport_, roll_to_center(env, sun_azimuth)));
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("percentile of an empty list");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return values[lo] + f * (values[hi] - values[lo]);
}

Quartiles quartiles(const std::vector<double>& values) {
  if (values.empty()) return {};
  return {values.size(), percentile(values, 0.25), percentile(values, 0.5), percentile(values, 0.75)};
}

BucketReport bucketed_report(std::span<const EvalPair> pairs) {
  if (pairs.empty()) throw InvalidInput("bucketed_report: no pairs");
  std::array<std::array<std::vector<double>, 4>, 2> values;
  for (const EvalPair& p : pairs) {
    if (p.bucket < 1 || p.bucket > 3) throw InvalidInput("softness bucket must be 1, 2 or 3");
    const double m[2] = {rmse(p.ground_truth, p.prediction), si_rmse(p.ground_truth, p.prediction)};
    for (int k = 0; k < 2; ++k) {
      values[k][p.bucket - 1].push_back(m[k]);
      values[k][3].push_back(m[k]);
    }
  }
  BucketReport r;
  for (int k = 0; k < 2; ++k)
    for (int c = 0; c < 4; ++c) r.cells[k][c] = quartiles(values[k][c]);
  return r;
}

std::string BucketReport::to_json() const {
  nlohmann::ordered_json j;
  j["columns"] = kColumns;
  for (int k = 0; k < 2; ++k) {
    nlohmann::ordered_json row;
    for (int c = 0; c < 4; ++c) {
      const Quartiles& q = cells[k][c];
      nlohmann::ordered_json cell;
      cell["count"] = q.count;
      if (q.count == 0) {
        cell["p25"] = nullptr;
        cell["median"] = nullptr;
        cell["p75"] = nullptr;
      } else {
        cell["p25"] = q.p25;
        cell["median"] = q.median;
        cell["p75"] = q.p75;
      }
      row[kColumns[c]] = cell;
    }
    j[kMetrics[k]] = row;
  }
  return j.dump(2);
}

std::string BucketReport::to_text() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %16s %16s %16s %16s\n", "softness", "1 clear", "2 mixed",
                "3 cloudy", "all");
  os << line;
  for (int k = 0; k < 2; ++k) {
    std::snprintf(line, sizeof(line), "%-10s", kMetrics[k]);
    os << line;
    for (int c = 0; c < 4; ++c) {
      const Quartiles& q = cells[k][c];
      if (q.count == 0) {
        std::snprintf(line, sizeof(line), " %16s", "-");
      } else {
        std::snprintf(line, sizeof(line), " %7.4f (n=%3zu)", q.median, q.count);
      }
      os << line;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace skylm
