// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

// Panorama operations: LDR simulation, sun detection, pinhole crops and
// azimuthal rolls.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "skylm/image.h"
#include "skylm/lm_sky.h"

namespace skylm {

enum class Rounding {
  kHalfUp,  // floor(x * 255 + 0.5)
  kFloor,   // floor(x * 255), values of exactly 1 map to 255
};

// clamp(exposure * x, 0, 1), optional x^(1/2.2), 8-bit quantization.
// Throws InvalidInput unless exposure > 0.
LdrImage ldr_simulate(const EnvMap& pano, double exposure, bool gamma_encode = false,
                      Rounding rounding = Rounding::kHalfUp);
// Same pipeline on an arbitrary float image (used for render previews).
LdrImage ldr_simulate(const RenderImage& image, double exposure, bool gamma_encode = false,
                      Rounding rounding = Rounding::kHalfUp);

// Map 8-bit values back to [0, 1] floats, undoing the 2.2 encode if asked.
EnvMap ldr_to_linear(const LdrImage& pano, bool gamma_decode = false);

struct ExposureRange {
  double min = 0.2;
  double max = 2.0;
};
// Log-uniform exposure draw. Throws InvalidInput for an empty or
// non-positive range.
double draw_exposure(std::uint64_t seed, const ExposureRange& range);

inline constexpr int kDefaultSaturationThreshold = 254;

// Centre of mass of the largest saturated region in the upper half of an
// equirectangular LDR panorama. A pixel is saturated when all channels are
// >= threshold. Regions use 8-connectivity and wrap across the left/right
// seam; size and centroid are solid-angle weighted. Returns nullopt when no
// sky pixel is saturated. Throws InvalidInput when width != 2 height.
std::optional<SunPosition> detect_sun(const LdrImage& pano,
                                      int saturation_threshold = kDefaultSaturationThreshold);

struct CropSpec {
  double azimuth = 0.0;
  double elevation = 0.0;
  double fov_horizontal = kPi / 3;
  int width = 320;
  int height = 240;
  bool operator==(const CropSpec&) const = default;
};

void validate(const CropSpec& spec);

// World-space unit ray through continuous image position (px, py); pixel
// centres sit at half-integers.
Vec3 crop_ray(const CropSpec& spec, double px, double py);

RenderImage extract_crop(const EnvMap& pano, const CropSpec& spec);
LdrImage extract_crop(const LdrImage& pano, const CropSpec& spec);

// count specs with seeded uniform azimuths and fixed elevation / fov / size.
std::vector<CropSpec> make_crop_set(std::uint64_t seed, int count = 7, double fov = kPi / 3,
                                    double elevation = 0.0, int width = 320, int height = 240);

// Circular column shift: output column u takes input column u - shift.
EnvMap roll_columns(const EnvMap& pano, int shift);
LdrImage roll_columns(const LdrImage& pano, int shift);

// Column shift that moves the texel containing `azimuth` to column width / 2.
int center_shift(double azimuth, int width);

EnvMap roll_to_center(const EnvMap& pano, double azimuth);
LdrImage roll_to_center(const LdrImage& pano, double azimuth);

}  // namespace skylm
