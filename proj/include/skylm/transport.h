// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

// Precomputed light transport for the probe scene: a diffuse sphere resting
// on a diffuse ground plane, seen from straight above by an orthographic
// camera. Relighting under an environment map is one matrix-vector product
// per colour channel. Direct lighting only.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "skylm/image.h"
#include "skylm/vec.h"

namespace skylm {

struct ProbeScene {
  Vec3 sphere_center{0.0, 1.0, 0.0};
  double sphere_radius = 1.0;
  double plane_albedo = 1.0;
  double sphere_albedo = 1.0;
  // The camera frames [-e, e] x [-e, e] of the ground plane around the origin.
  double view_half_extent = 3.0;
  int render_width = 64;
  int render_height = 64;

  // Throws InvalidInput unless the sphere touches the plane, the view covers
  // at least four radii of ground and the render size is positive.
  void validate() const;
  std::uint64_t hash() const;

  // Ground-plane coordinates (x, z) under the centre of pixel (col, row).
  // Image rows run along +x, image columns along -z, so a sun at azimuth pi
  // casts its shadow towards the bottom of the image.
  double pixel_x(int row) const;
  double pixel_z(int col) const;
  // Last image row whose centre lies on the sphere's footprint.
  int footprint_last_row() const;
};

class TransportMatrix {
 public:
  TransportMatrix() = default;
  TransportMatrix(int render_width, int render_height, int env_height, std::uint64_t scene_hash,
                  std::vector<float> entries);

  int render_width() const { return render_width_; }
  int render_height() const { return render_height_; }
  int env_width() const { return 2 * env_height_; }
  int env_height() const { return env_height_; }
  std::size_t rows() const { return static_cast<std::size_t>(render_width_) * render_height_; }
  std::size_t cols() const { return static_cast<std::size_t>(env_width()) * env_height_; }
  std::uint64_t scene_hash() const { return scene_hash_; }

  float at(std::size_t pixel, std::size_t texel) const { return entries_[pixel * cols() + texel]; }
  std::span<const float> row(std::size_t pixel) const {
    return {entries_.data() + pixel * cols(), cols()};
  }
  std::span<const float> entries() const { return entries_; }

  // Single-channel product: out[p] = sum_j T[p, j] * values[j]. values has
  // one float per texel.
  void apply_scalar(std::span<const float> values, std::span<double> out) const;
  // Same product for several vectors in one pass over the matrix. Result k
  // goes to out[k * rows() + p] and equals apply_scalar(values[k]) exactly.
  void apply_scalar_batch(std::span<const std::span<const float>> values, std::span<double> out) const;

  bool operator==(const TransportMatrix&) const = default;

 private:
  int render_width_ = 0;
  int render_height_ = 0;
  int env_height_ = 0;
  std::uint64_t scene_hash_ = 0;
  std::vector<float> entries_;
};

// Row p, column j: (albedo / pi) max(0, n . w_j) V(x, w_j) dw_j for every
// upper-hemisphere texel j; lower-hemisphere columns are zero. Throws
// InvalidInput unless env_height >= 8 and even.
TransportMatrix build_transport(const ProbeScene& scene, int env_height);

// image = T vec(env) per channel. Throws DimensionMismatch when env does not
// match the geometry T was built for.
RenderImage render_probe(const TransportMatrix& transport, const EnvMap& env);

// --- On-disk cache ---

inline constexpr std::uint32_t kTransportCacheVersion = 1;

class CacheVersionMismatch : public IoError {
 public:
  using IoError::IoError;
};

// Versioned little-endian file: 8-byte magic, version, render and env
// dimensions, scene hash, then row-major float32 entries.
void save_transport(const std::filesystem::path& path, const TransportMatrix& transport);
TransportMatrix load_transport(const std::filesystem::path& path);

std::filesystem::path transport_cache_path(const std::filesystem::path& dir,
                                           const ProbeScene& scene, int env_height);

// Loads the cached matrix when it exists and matches; otherwise builds and
// stores it. Problems with an existing cache file are reported through
// `warn` and trigger a rebuild.
TransportMatrix load_or_build_transport(const std::filesystem::path& cache_dir,
                                        const ProbeScene& scene, int env_height,
                                        const std::function<void(const std::string&)>& warn = {});

}  // namespace skylm
