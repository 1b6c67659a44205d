// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/envmap.h"

#include <cmath>
#include <sstream>

#include "skylm/random.h"

namespace skylm {
namespace {

std::uint8_t quantize(double x, double exposure, bool gamma_encode, Rounding rounding) {
  double y = std::clamp(exposure * x, 0.0, 1.0);
  if (gamma_encode) y = std::pow(y, 1.0 / 2.2);
  const double scaled = y * 255.0;
  const double q = rounding == Rounding::kHalfUp ? std::floor(scaled + 0.5) : std::floor(scaled);
  return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
}

void require_exposure(double exposure) {
  if (!(exposure > 0.0) || !std::isfinite(exposure))
    throw InvalidInput("exposure must be finite and > 0");
}

void require_equirect(int width, int height) {
  if (height <= 0 || width != 2 * height) {
    std::ostringstream os;
    os << "equirectangular image must be 2:1, got " << width << "x" << height;
    throw InvalidInput(os.str());
  }
}

// Bilinear lookup on an equirectangular grid; wraps in azimuth and clamps
// in zenith. `fetch(u, v, c)` returns a texel channel.
template <typename Fetch>
void sample_equirect(int width, int height, const Vec3& dir, Fetch fetch, double out[3]) {
  const double zenith = std::acos(std::clamp(dir.y, -1.0, 1.0));
  const double azimuth = wrap_angle(std::atan2(dir.z, dir.x));
  const double x = azimuth / kTwoPi * width - 0.5;
  const double y = std::clamp(zenith / kPi * height - 0.5, 0.0, height - 1.0);
  const double x0f = std::floor(x);
  const double y0f = std::floor(y);
  const double fx = x - x0f;
  const double fy = y - y0f;
  const int u0 = ((static_cast<int>(x0f) % width) + width) % width;
  const int u1 = (u0 + 1) % width;
  const int v0 = static_cast<int>(y0f);
  const int v1 = std::min(v0 + 1, height - 1);
  for (int c = 0; c < 3; ++c) {
    out[c] = (1 - fy) * ((1 - fx) * fetch(u0, v0, c) + fx * fetch(u1, v0, c)) +
             fy * ((1 - fx) * fetch(u0, v1, c) + fx * fetch(u1, v1, c));
  }
}

template <typename Get, typename Put>
void roll_impl(int width, int height, int shift, Get get, Put put) {
  const int s = ((shift % width) + width) % width;
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u)
      for (int c = 0; c < 3; ++c) put((u + s) % width, v, c, get(u, v, c));
}

}  // namespace

LdrImage ldr_simulate(const EnvMap& pano, double exposure, bool gamma_encode, Rounding rounding) {
  require_exposure(exposure);
  LdrImage out(pano.width(), pano.height());
  const std::span<const float> src = pano.data();
  for (std::size_t i = 0; i < src.size(); ++i)
    out.data[i] = quantize(src[i], exposure, gamma_encode, rounding);
  return out;
}

LdrImage ldr_simulate(const RenderImage& image, double exposure, bool gamma_encode,
                      Rounding rounding) {
  require_exposure(exposure);
  LdrImage out(image.width, image.height);
  for (std::size_t i = 0; i < image.data.size(); ++i)
    out.data[i] = quantize(image.data[i], exposure, gamma_encode, rounding);
  return out;
}

EnvMap ldr_to_linear(const LdrImage& pano, bool gamma_decode) {
  require_equirect(pano.width, pano.height);
  std::vector<float> rgb(pano.data.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    double x = pano.data[i] / 255.0;
    if (gamma_decode) x = std::pow(x, 2.2);
    rgb[i] = static_cast<float>(x);
  }
  return EnvMap(pano.height, std::move(rgb));
}

double draw_exposure(std::uint64_t seed, const ExposureRange& range) {
  if (!(range.min > 0.0) || !(range.max >= range.min) || !std::isfinite(range.max))
    throw InvalidInput("exposure range must satisfy 0 < min <= max");
  Rng rng(derive_seed(seed, "exposure"));
  return rng.log_uniform(range.min, range.max);
}

std::optional<SunPosition> detect_sun(const LdrImage& pano, int saturation_threshold) {
  require_equirect(pano.width, pano.height);
  const int w = pano.width;
  const int rows = pano.height / 2;
  const auto saturated = [&](int u, int v) {
    for (int c = 0; c < 3; ++c)
      if (pano.at(u, v, c) < saturation_threshold) return false;
    return true;
  };

  std::vector<int> label(static_cast<std::size_t>(w) * rows, -1);
  std::vector<std::pair<int, int>> stack;
  double best_area = 0.0;
  Vec3 best_moment;
  int next_label = 0;
  for (int v0 = 0; v0 < rows; ++v0) {
    for (int u0 = 0; u0 < w; ++u0) {
      if (label[v0 * w + u0] >= 0 || !saturated(u0, v0)) continue;
      double area = 0.0;
      Vec3 moment;
      stack.assign(1, {u0, v0});
      label[v0 * w + u0] = next_label;
      while (!stack.empty()) {
        const auto [u, v] = stack.back();
        stack.pop_back();
        const double d_omega = texel_solid_angle(v, w, pano.height);
        area += d_omega;
        moment += texel_direction(u, v, w, pano.height) * d_omega;
        for (int dv = -1; dv <= 1; ++dv) {
          const int nv = v + dv;
          if (nv < 0 || nv >= rows) continue;
          for (int du = -1; du <= 1; ++du) {
            const int nu = (u + du + w) % w;
            int& l = label[nv * w + nu];
            if (l >= 0 || !saturated(nu, nv)) continue;
            l = next_label;
            stack.emplace_back(nu, nv);
          }
        }
      }
      ++next_label;
      if (area > best_area) {
        best_area = area;
        best_moment = moment;
      }
    }
  }
  if (best_area <= 0.0) return std::nullopt;
  const Vec3 c = normalize(best_moment);
  const double zenith = std::min(std::acos(std::clamp(c.y, -1.0, 1.0)), kPi / 2);
  return SunPosition::make(zenith, std::atan2(c.z, c.x));
}

void validate(const CropSpec& spec) {
  if (!(spec.fov_horizontal > 0.0 && spec.fov_horizontal < kPi))
    throw InvalidInput("crop fov must lie in (0, pi)");
  if (spec.width <= 0 || spec.height <= 0) throw InvalidInput("crop size must be positive");
  if (!(std::abs(spec.elevation) < kPi / 2)) throw InvalidInput("crop elevation must lie in (-pi/2, pi/2)");
}

Vec3 crop_ray(const CropSpec& spec, double px, double py) {
  const Vec3 forward = spherical_direction(kPi / 2 - spec.elevation, spec.azimuth);
  const Vec3 right = normalize(cross(forward, Vec3{0, 1, 0}));
  const Vec3 up = cross(right, forward);
  const double tan_half = std::tan(spec.fov_horizontal / 2);
  const double sx = (2.0 * px / spec.width - 1.0) * tan_half;
  const double sy = (1.0 - 2.0 * py / spec.height) * tan_half * spec.height / spec.width;
  return normalize(forward + right * sx + up * sy);
}

RenderImage extract_crop(const EnvMap& pano, const CropSpec& spec) {
  validate(spec);
  RenderImage out(spec.width, spec.height);
  const auto fetch = [&](int u, int v, int c) { return double{pano.at(u, v, c)}; };
  double px[3];
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      sample_equirect(pano.width(), pano.height(), crop_ray(spec, x + 0.5, y + 0.5), fetch, px);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(px[c]);
    }
  }
  return out;
}

LdrImage extract_crop(const LdrImage& pano, const CropSpec& spec) {
  validate(spec);
  require_equirect(pano.width, pano.height);
  LdrImage out(spec.width, spec.height);
  const auto fetch = [&](int u, int v, int c) { return static_cast<double>(pano.at(u, v, c)); };
  double px[3];
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      sample_equirect(pano.width, pano.height, crop_ray(spec, x + 0.5, y + 0.5), fetch, px);
      for (int c = 0; c < 3; ++c)
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(px[c] + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

std::vector<CropSpec> make_crop_set(std::uint64_t seed, int count, double fov, double elevation,
                                    int width, int height) {
  if (count < 1) throw InvalidInput("crop count must be >= 1");
  Rng rng(derive_seed(seed, "crops"));
  std::vector<CropSpec> specs;
  specs.reserve(count);
  for (int i = 0; i < count; ++i) {
    CropSpec s{rng.uniform(0.0, kTwoPi), elevation, fov, width, height};
    validate(s);
    specs.push_back(s);
  }
  return specs;
}

EnvMap roll_columns(const EnvMap& pano, int shift) {
  EnvMap out(pano.height());
  roll_impl(
      pano.width(), pano.height(), shift, [&](int u, int v, int c) { return pano.at(u, v, c); },
      [&](int u, int v, int c, float x) { out.at(u, v, c) = x; });
  return out;
}

LdrImage roll_columns(const LdrImage& pano, int shift) {
  LdrImage out(pano.width, pano.height);
  roll_impl(
      pano.width, pano.height, shift, [&](int u, int v, int c) { return pano.at(u, v, c); },
      [&](int u, int v, int c, std::uint8_t x) { out.at(u, v, c) = x; });
  return out;
}

int center_shift(double azimuth, int width) {
  const int col = std::clamp(static_cast<int>(wrap_angle(azimuth) / kTwoPi * width), 0, width - 1);
  return width / 2 - col;
}

EnvMap roll_to_center(const EnvMap& pano, double azimuth) {
  return roll_columns(pano, center_shift(azimuth, pano.width()));
}

LdrImage roll_to_center(const LdrImage& pano, double azimuth) {
  require_equirect(pano.width, pano.height);
  return roll_columns(pano, center_shift(azimuth, pano.width));
}

}  // namespace skylm
