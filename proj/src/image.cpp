// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/image.h"

#include <cmath>
#include <sstream>
#include <string>

namespace skylm {

EnvMap::EnvMap(int height) : height_(height) {
  if (height <= 0) throw InvalidInput("EnvMap height must be positive");
  data_.assign(texel_count() * 3, 0.0f);
}

EnvMap::EnvMap(int height, std::vector<float> rgb) : height_(height), data_(std::move(rgb)) {
  if (height <= 0) throw InvalidInput("EnvMap height must be positive");
  if (data_.size() != texel_count() * 3) {
    std::ostringstream os;
    os << "EnvMap of height " << height << " needs " << texel_count() * 3 << " floats, got "
       << data_.size();
    throw InvalidInput(os.str());
  }
  if (std::string why = describe_invalid_radiance(data_); !why.empty()) throw InvalidInput(why);
}

std::string describe_invalid_radiance(std::span<const float> rgb) {
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    const float x = rgb[i];
    if (!std::isfinite(x) || x < 0.0f) {
      std::ostringstream os;
      os << "radiance value " << x << " at float index " << i << " is not finite and non-negative";
      return os.str();
    }
  }
  return {};
}

double texel_zenith(int v, int height) { return kPi * (v + 0.5) / height; }

double texel_azimuth(int u, int width) { return kTwoPi * (u + 0.5) / width; }

Vec3 texel_direction(int u, int v, int width, int height) {
  if (u < 0 || u >= width || v < 0 || v >= height) {
    std::ostringstream os;
    os << "texel (" << u << ", " << v << ") outside " << width << "x" << height << " map";
    throw InvalidInput(os.str());
  }
  return spherical_direction(texel_zenith(v, height), texel_azimuth(u, width));
}

std::pair<int, int> direction_to_texel(const Vec3& dir, int width, int height) {
  const double zenith = std::acos(std::clamp(dir.y / length(dir), -1.0, 1.0));
  const double azimuth = wrap_angle(std::atan2(dir.z, dir.x));
  const int u = std::clamp(static_cast<int>(azimuth / kTwoPi * width), 0, width - 1);
  const int v = std::clamp(static_cast<int>(zenith / kPi * height), 0, height - 1);
  return {u, v};
}

double texel_solid_angle(int v, int width, int height) {
  return (kTwoPi / width) * (kPi / height) * std::sin(texel_zenith(v, height));
}

}  // namespace skylm
