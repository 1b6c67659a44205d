// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skylm/errors.h"
#include "skylm/vec.h"

namespace skylm {

// Row-major interleaved RGB image.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, T{}) {}

  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 3; }
  T& at(int x, int y, int c) { return data[index(x, y) + c]; }
  T at(int x, int y, int c) const { return data[index(x, y) + c]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
  bool operator==(const Image&) const = default;
};

// Linear float render of the probe scene (or a pinhole crop of an HDR map).
using RenderImage = Image<float>;
// 8-bit RGB image; panoramas and crops after LDR simulation.
using LdrImage = Image<std::uint8_t>;

// Equirectangular HDR radiance map. Width is always twice the height, and
// every value is finite and non-negative.
//
// Row v covers zenith angles around pi (v + 0.5) / height, column u covers
// azimuths around 2 pi (u + 0.5) / width.
class EnvMap {
 public:
  EnvMap() = default;
  // Zero-filled map of the given height.
  explicit EnvMap(int height);
  // Takes ownership of interleaved RGB data. Throws InvalidInput when the
  // size is wrong or a value is negative or non-finite.
  EnvMap(int height, std::vector<float> rgb);

  int width() const { return 2 * height_; }
  int height() const { return height_; }
  std::size_t texel_count() const { return static_cast<std::size_t>(width()) * height_; }

  float at(int u, int v, int c) const { return data_[index(u, v) + c]; }
  float& at(int u, int v, int c) { return data_[index(u, v) + c]; }
  Rgb texel(int u, int v) const {
    const std::size_t i = index(u, v);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set_texel(int u, int v, const Rgb& c) {
    const std::size_t i = index(u, v);
    data_[i] = static_cast<float>(c.r);
    data_[i + 1] = static_cast<float>(c.g);
    data_[i + 2] = static_cast<float>(c.b);
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool same_shape(const EnvMap& o) const { return height_ == o.height_; }
  bool operator==(const EnvMap&) const = default;

 private:
  std::size_t index(int u, int v) const { return (static_cast<std::size_t>(v) * width() + u) * 3; }

  int height_ = 0;
  std::vector<float> data_;
};

// First value violating the EnvMap invariants, if any, as a message.
// Empty string means the data is valid.
std::string describe_invalid_radiance(std::span<const float> rgb);

// --- Equirectangular geometry ---

double texel_zenith(int v, int height);
double texel_azimuth(int u, int width);

// Unit direction through the centre of texel (u, v). Throws InvalidInput for
// indices outside the map.
Vec3 texel_direction(int u, int v, int width, int height);

// Texel (u, v) whose area contains the given unit direction.
std::pair<int, int> direction_to_texel(const Vec3& dir, int width, int height);

// Midpoint-rule solid angle of any texel in row v.
double texel_solid_angle(int v, int width, int height);

}  // namespace skylm
