// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "support.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace skylm::testing {
namespace {

struct Hit {
  double px, py, pz;
  double nx, ny, nz;
  double albedo;
  bool ground;
};

// Sphere point seen from straight above, otherwise the ground point.
Hit camera_hit(const ProbeScene& s, double x, double z) {
  const double rx = x - s.sphere_center.x;
  const double rz = z - s.sphere_center.z;
  const double h2 = s.sphere_radius * s.sphere_radius - rx * rx - rz * rz;
  if (h2 > 0.0) {
    const double ry = std::sqrt(h2);
    const double inv = 1.0 / s.sphere_radius;
    return {x, s.sphere_center.y + ry, z, rx * inv, ry * inv, rz * inv, s.sphere_albedo, false};
  }
  return {x, 0.0, z, 0.0, 1.0, 0.0, s.plane_albedo, true};
}

// Ray-sphere test by closest approach: the ray o + t d (t > 0) meets the
// sphere iff the closest point lies ahead and inside the radius.
bool ray_meets_sphere(const ProbeScene& s, const Hit& h, double dx, double dy, double dz) {
  const double cx = s.sphere_center.x - h.px;
  const double cy = s.sphere_center.y - h.py;
  const double cz = s.sphere_center.z - h.pz;
  const double t = cx * dx + cy * dy + cz * dz;
  if (t <= 0.0) return false;
  const double ex = cx - t * dx, ey = cy - t * dy, ez = cz - t * dz;
  return ex * ex + ey * ey + ez * ez < s.sphere_radius * s.sphere_radius;
}

}  // namespace

RenderImage render_probe_oracle(const ProbeScene& scene, const EnvMap& env) {
  const int h = env.height();
  const int w = env.width();
  const double d_theta = kPi / h;
  const double d_phi = 2.0 * kPi / w;
  RenderImage img(scene.render_width, scene.render_height);
  for (int row = 0; row < scene.render_height; ++row) {
    const double x = -scene.view_half_extent +
                     (row + 0.5) * (2.0 * scene.view_half_extent / scene.render_height);
    for (int col = 0; col < scene.render_width; ++col) {
      const double z = scene.view_half_extent -
                       (col + 0.5) * (2.0 * scene.view_half_extent / scene.render_width);
      const Hit hit = camera_hit(scene, x, z);
      double acc[3] = {0.0, 0.0, 0.0};
      for (int v = 0; v < h / 2; ++v) {
        const double theta = (v + 0.5) * d_theta;
        const double st = std::sin(theta), ct = std::cos(theta);
        const double d_omega = st * d_theta * d_phi;
        for (int u = 0; u < w; ++u) {
          const double phi = (u + 0.5) * d_phi;
          const double dx = st * std::cos(phi), dy = ct, dz = st * std::sin(phi);
          const double cosine = hit.nx * dx + hit.ny * dy + hit.nz * dz;
          if (cosine <= 0.0) continue;
          if (hit.ground && ray_meets_sphere(scene, hit, dx, dy, dz)) continue;
          const double k = hit.albedo / kPi * cosine * d_omega;
          for (int c = 0; c < 3; ++c) acc[c] += k * env.at(u, v, c);
        }
      }
      for (int c = 0; c < 3; ++c) img.at(col, row, c) = static_cast<float>(acc[c]);
    }
  }
  return img;
}

LdrImage sun_disk_panorama(int height, const SunPosition& sun, double radius,
                           std::uint8_t background) {
  const int width = 2 * height;
  LdrImage pano(width, height);
  const Vec3 s = sun.direction();
  const double cos_r = std::cos(radius);
  for (int v = 0; v < height; ++v) {
    const double theta = kPi * (v + 0.5) / height;
    for (int u = 0; u < width; ++u) {
      const double phi = 2.0 * kPi * (u + 0.5) / width;
      const double c = std::sin(theta) * std::cos(phi) * s.x + std::cos(theta) * s.y +
                       std::sin(theta) * std::sin(phi) * s.z;
      const std::uint8_t value = c >= cos_r ? 255 : background;
      for (int k = 0; k < 3; ++k) pano.at(u, v, k) = value;
    }
  }
  return pano;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::ostringstream name;
  name << "skylm-test-" << tag << "-" << ::getpid() << "-" << counter++;
  path_ = std::filesystem::temp_directory_path() / name.str();
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace skylm::testing
