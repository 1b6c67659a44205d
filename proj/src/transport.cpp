// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/transport.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "skylm/parallel.h"
#include "skylm/random.h"

namespace skylm {
namespace {

constexpr char kMagic[8] = {'S', 'K', 'Y', 'L', 'M', 'T', 'M', '\0'};

struct SurfacePoint {
  Vec3 position;
  Vec3 normal;
  double albedo;
  bool on_plane;
};

// Orthographic ray straight down through ground position (x, z).
SurfacePoint primary_hit(const ProbeScene& scene, double x, double z) {
  const double dx = x - scene.sphere_center.x;
  const double dz = z - scene.sphere_center.z;
  const double r2 = scene.sphere_radius * scene.sphere_radius;
  const double d2 = dx * dx + dz * dz;
  if (d2 < r2) {
    const Vec3 p{x, scene.sphere_center.y + std::sqrt(r2 - d2), z};
    return {p, (p - scene.sphere_center) * (1.0 / scene.sphere_radius), scene.sphere_albedo, false};
  }
  return {{x, 0.0, z}, {0.0, 1.0, 0.0}, scene.plane_albedo, true};
}

// Does the ray from a ground point towards w (w.y > 0) hit the sphere?
bool sphere_blocks(const ProbeScene& scene, const Vec3& origin, const Vec3& w) {
  const Vec3 oc = origin - scene.sphere_center;
  const double b = dot(w, oc);
  const double c = dot(oc, oc) - scene.sphere_radius * scene.sphere_radius;
  if (b >= 0.0) return false;  // sphere is behind the ray origin
  return b * b - c > 0.0;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void ProbeScene::validate() const {
  if (!(sphere_radius > 0.0)) throw InvalidInput("sphere radius must be positive");
  if (std::abs(sphere_center.y - sphere_radius) > 1e-12)
    throw InvalidInput("sphere must rest on the ground plane (center.y == radius)");
  if (!(view_half_extent >= 2.0 * sphere_radius))
    throw InvalidInput("probe view must cover at least four sphere radii of ground");
  if (render_width <= 0 || render_height <= 0) throw InvalidInput("render size must be positive");
  if (!(plane_albedo >= 0.0) || !(sphere_albedo >= 0.0)) throw InvalidInput("albedo must be >= 0");
}

std::uint64_t ProbeScene::hash() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "probe-scene|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%d|%d",
                sphere_center.x, sphere_center.y, sphere_center.z, sphere_radius, plane_albedo,
                sphere_albedo, view_half_extent, render_width, render_height);
  return fnv1a(buf);
}

double ProbeScene::pixel_x(int row) const {
  return -view_half_extent + 2.0 * view_half_extent * (row + 0.5) / render_height;
}

double ProbeScene::pixel_z(int col) const {
  return view_half_extent - 2.0 * view_half_extent * (col + 0.5) / render_width;
}

int ProbeScene::footprint_last_row() const {
  int last = -1;
  for (int row = 0; row < render_height; ++row)
    if (pixel_x(row) <= sphere_center.x + sphere_radius) last = row;
  return last;
}

TransportMatrix::TransportMatrix(int render_width, int render_height, int env_height,
                                 std::uint64_t scene_hash, std::vector<float> entries)
    : render_width_(render_width),
      render_height_(render_height),
      env_height_(env_height),
      scene_hash_(scene_hash),
      entries_(std::move(entries)) {
  if (entries_.size() != rows() * cols()) throw InvalidInput("transport entry count mismatch");
}

namespace {

// Eight interleaved partial sums let the compiler vectorize without
// reassociating, so results do not depend on optimization flags.
double dot_upper(const float* t, const float* v, std::size_t n) {
  double acc[8] = {};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8)
    for (int k = 0; k < 8; ++k) acc[k] += static_cast<double>(t[j + k]) * v[j + k];
  for (; j < n; ++j) acc[0] += static_cast<double>(t[j]) * v[j];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

}  // namespace

void TransportMatrix::apply_scalar(std::span<const float> values, std::span<double> out) const {
  const std::span<const float> one[1] = {values};
  apply_scalar_batch(one, out);
}

void TransportMatrix::apply_scalar_batch(std::span<const std::span<const float>> values,
                                         std::span<double> out) const {
  for (const auto& v : values)
    if (v.size() != cols()) throw DimensionMismatch("transport apply: size mismatch");
  if (out.size() != rows() * values.size()) throw DimensionMismatch("transport apply: size mismatch");
  // Lower-hemisphere columns are zero; they form the second half of each row.
  const std::size_t upper = cols() / 2;
  for (std::size_t p = 0; p < rows(); ++p) {
    const float* t = entries_.data() + p * cols();
    for (std::size_t k = 0; k < values.size(); ++k) out[k * rows() + p] = dot_upper(t, values[k].data(), upper);
  }
}

TransportMatrix build_transport(const ProbeScene& scene, int env_height) {
  scene.validate();
  if (env_height < 8 || env_height % 2 != 0)
    throw InvalidInput("transport env_height must be even and >= 8");
  const int env_w = 2 * env_height;
  const std::size_t cols = static_cast<std::size_t>(env_w) * env_height;
  const std::size_t upper = cols / 2;

  std::vector<Vec3> dirs(upper);
  std::vector<double> d_omega(upper);
  for (int v = 0; v < env_height / 2; ++v) {
    for (int u = 0; u < env_w; ++u) {
      const std::size_t j = static_cast<std::size_t>(v) * env_w + u;
      dirs[j] = texel_direction(u, v, env_w, env_height);
      d_omega[j] = texel_solid_angle(v, env_w, env_height);
    }
  }

  const std::size_t n_pixels = static_cast<std::size_t>(scene.render_width) * scene.render_height;
  std::vector<float> entries(n_pixels * cols, 0.0f);
  parallel_for(n_pixels, [&](std::size_t p) {
    const int row = static_cast<int>(p / scene.render_width);
    const int col = static_cast<int>(p % scene.render_width);
    const SurfacePoint hit = primary_hit(scene, scene.pixel_x(row), scene.pixel_z(col));
    float* out = entries.data() + p * cols;
    const double k = hit.albedo / kPi;
    for (std::size_t j = 0; j < upper; ++j) {
      const double cos_term = dot(hit.normal, dirs[j]);
      if (cos_term <= 0.0) continue;
      if (hit.on_plane && sphere_blocks(scene, hit.position, dirs[j])) continue;
      out[j] = static_cast<float>(k * cos_term * d_omega[j]);
    }
  });
  return TransportMatrix(scene.render_width, scene.render_height, env_height, scene.hash(),
                         std::move(entries));
}

RenderImage render_probe(const TransportMatrix& transport, const EnvMap& env) {
  if (env.width() != transport.env_width() || env.height() != transport.env_height()) {
    std::ostringstream os;
    os << "environment map " << env.width() << "x" << env.height() << " does not match transport "
       << transport.env_width() << "x" << transport.env_height();
    throw DimensionMismatch(os.str());
  }
  const std::size_t n = transport.cols();
  std::vector<float> planes(3 * n);
  const std::span<const float> e = env.data();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < 3; ++c) planes[c * n + j] = e[3 * j + c];
  const std::span<const float> channels[3] = {{planes.data(), n}, {planes.data() + n, n},
                                              {planes.data() + 2 * n, n}};
  std::vector<double> out(3 * transport.rows());
  transport.apply_scalar_batch(channels, out);

  RenderImage img(transport.render_width(), transport.render_height());
  for (std::size_t p = 0; p < transport.rows(); ++p)
    for (std::size_t c = 0; c < 3; ++c) img.data[3 * p + c] = static_cast<float>(out[c * transport.rows() + p]);
  return img;
}

void save_transport(const std::filesystem::path& path, const TransportMatrix& transport) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kTransportCacheVersion);
  write_u32(out, static_cast<std::uint32_t>(transport.render_width()));
  write_u32(out, static_cast<std::uint32_t>(transport.render_height()));
  write_u32(out, static_cast<std::uint32_t>(transport.env_width()));
  write_u32(out, static_cast<std::uint32_t>(transport.env_height()));
  write_u64(out, transport.scene_hash());
  std::vector<unsigned char> buf(transport.entries().size() * 4);
  for (std::size_t i = 0; i < transport.entries().size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &transport.entries()[i], 4);
    for (int k = 0; k < 4; ++k) buf[4 * i + k] = static_cast<unsigned char>(bits >> (8 * k));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

TransportMatrix load_transport(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  constexpr std::size_t kHeader = 8 + 5 * 4 + 8;
  unsigned char header[kHeader];
  in.read(reinterpret_cast<char*>(header), kHeader);
  if (in.gcount() != static_cast<std::streamsize>(kHeader))
    throw MalformedHeader("transport cache header truncated: " + path.string());
  if (std::memcmp(header, kMagic, sizeof(kMagic)) != 0)
    throw MalformedHeader("not a transport cache file: " + path.string());
  const auto version = static_cast<std::uint32_t>(read_le(header + 8, 4));
  if (version != kTransportCacheVersion) {
    std::ostringstream os;
    os << "transport cache version " << version << " != " << kTransportCacheVersion << " in "
       << path.string();
    throw CacheVersionMismatch(os.str());
  }
  const int rw = static_cast<int>(read_le(header + 12, 4));
  const int rh = static_cast<int>(read_le(header + 16, 4));
  const int ew = static_cast<int>(read_le(header + 20, 4));
  const int eh = static_cast<int>(read_le(header + 24, 4));
  const std::uint64_t hash = read_le(header + 28, 8);
  if (rw <= 0 || rh <= 0 || eh <= 0 || ew != 2 * eh)
    throw MalformedHeader("invalid transport dimensions in " + path.string());
  const std::size_t count = static_cast<std::size_t>(rw) * rh * ew * eh;
  std::vector<unsigned char> buf(count * 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw TruncatedPayload("transport cache payload truncated: " + path.string());
  std::vector<float> entries(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = static_cast<std::uint32_t>(read_le(buf.data() + 4 * i, 4));
    std::memcpy(&entries[i], &bits, 4);
  }
  return TransportMatrix(rw, rh, eh, hash, std::move(entries));
}

std::filesystem::path transport_cache_path(const std::filesystem::path& dir,
                                           const ProbeScene& scene, int env_height) {
  char name[96];
  std::snprintf(name, sizeof(name), "transport_%016llx_env%d.bin",
                static_cast<unsigned long long>(scene.hash()), env_height);
  return dir / name;
}

TransportMatrix load_or_build_transport(const std::filesystem::path& cache_dir,
                                        const ProbeScene& scene, int env_height,
                                        const std::function<void(const std::string&)>& warn) {
  const std::filesystem::path path = transport_cache_path(cache_dir, scene, env_height);
  if (std::filesystem::exists(path)) {
    try {
      TransportMatrix t = load_transport(path);
      if (t.scene_hash() == scene.hash() && t.env_height() == env_height &&
          t.render_width() == scene.render_width && t.render_height() == scene.render_height)
        return t;
      if (warn) warn("transport cache " + path.string() + " does not match the scene; rebuilding");
    } catch (const IoError& e) {
      if (warn) warn(std::string(e.what()) + "; rebuilding");
    }
  }
  TransportMatrix t = build_transport(scene, env_height);
  std::filesystem::create_directories(cache_dir);
  save_transport(path, t);
  return t;
}

}  // namespace skylm
