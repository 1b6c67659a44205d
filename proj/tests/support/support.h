// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the unit and acceptance tests.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "skylm/image.h"
#include "skylm/lm_sky.h"
#include "skylm/transport.h"

namespace skylm::testing {

// Brute-force probe render: casts every camera ray and every texel ray with
// its own intersection code and integrates the environment texel by texel in
// double precision. Shares nothing with build_transport beyond the scene
// description.
RenderImage render_probe_oracle(const ProbeScene& scene, const EnvMap& env);

// Equirectangular LDR panorama with a fully saturated spherical cap of the
// given angular radius on a uniform unsaturated background.
LdrImage sun_disk_panorama(int height, const SunPosition& sun, double radius,
                           std::uint8_t background = 90);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

// Relative difference |a - b| / max(|a|, |b|), 0 when both are 0.
double relative_difference(double a, double b);

}  // namespace skylm::testing
