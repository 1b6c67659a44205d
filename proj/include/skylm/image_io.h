// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "skylm/image.h"

namespace skylm {

enum class ImageFormat { kPfm, kPng };

// Format from the file extension (.pfm / .png, case-insensitive). Throws
// UnsupportedFormat otherwise.
ImageFormat format_from_path(const std::filesystem::path& path);

// PFM reader. Accepts "PF" (RGB) and "Pf" (grey, replicated to RGB), either
// byte order. Throws MalformedHeader, TruncatedPayload or UnsupportedFormat.
RenderImage read_pfm(const std::filesystem::path& path);
// Always writes "PF", scale -1.0 (little-endian), rows bottom to top.
void write_pfm(const std::filesystem::path& path, const RenderImage& image);

// HDR panorama read with the EnvMap invariants enforced: ValidationError for
// a non 2:1 image or a negative / non-finite value.
EnvMap read_envmap(const std::filesystem::path& path);
void write_envmap(const std::filesystem::path& path, const EnvMap& env);

// 8-bit RGB PNG. Any PNG colour type is converted to RGB on read.
LdrImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const LdrImage& image);

RenderImage to_render_image(const EnvMap& env);

}  // namespace skylm
