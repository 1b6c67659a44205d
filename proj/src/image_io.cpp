// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/image_io.h"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace skylm {
namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Next whitespace-delimited header token starting at `pos`.
std::string next_token(const std::string& buf, std::size_t& pos, const std::filesystem::path& path) {
  while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  const std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  if (start == pos) throw MalformedHeader("PFM header ends early in " + path.string());
  return buf.substr(start, pos - start);
}

std::uint32_t byteswap32(std::uint32_t x) {
  return (x >> 24) | ((x >> 8) & 0xff00u) | ((x << 8) & 0xff0000u) | (x << 24);
}

}  // namespace

ImageFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".pfm") return ImageFormat::kPfm;
  if (ext == ".png") return ImageFormat::kPng;
  throw UnsupportedFormat("unsupported image extension '" + ext + "' for " + path.string());
}

RenderImage read_pfm(const std::filesystem::path& path) {
  const std::string buf = read_all(path);
  std::size_t pos = 0;
  const std::string magic = next_token(buf, pos, path);
  int channels = 0;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw UnsupportedFormat("not a PFM file (magic '" + magic.substr(0, 8) + "'): " + path.string());
  }
  int width = 0, height = 0;
  double scale = 0.0;
  try {
    std::size_t used = 0;
    const std::string ws = next_token(buf, pos, path);
    width = std::stoi(ws, &used);
    if (used != ws.size()) throw std::invalid_argument(ws);
    const std::string hs = next_token(buf, pos, path);
    height = std::stoi(hs, &used);
    if (used != hs.size()) throw std::invalid_argument(hs);
    const std::string ss = next_token(buf, pos, path);
    scale = std::stod(ss, &used);
    if (used != ss.size()) throw std::invalid_argument(ss);
  } catch (const std::logic_error&) {
    throw MalformedHeader("unparsable PFM header in " + path.string());
  }
  if (width <= 0 || height <= 0 || scale == 0.0 || !std::isfinite(scale))
    throw MalformedHeader("invalid PFM dimensions or scale in " + path.string());
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
    throw MalformedHeader("PFM header not terminated in " + path.string());
  ++pos;

  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (buf.size() - pos < count * 4) {
    std::ostringstream os;
    os << "PFM payload truncated in " << path.string() << ": need " << count * 4 << " bytes, have "
       << buf.size() - pos;
    throw TruncatedPayload(os.str());
  }
  const bool file_little = scale < 0.0;
  const bool swap = file_little != (std::endian::native == std::endian::little);

  RenderImage img(width, height);
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x) {
      for (int k = 0; k < channels; ++k) {
        std::uint32_t bits;
        std::memcpy(&bits, buf.data() + pos, 4);
        pos += 4;
        if (swap) bits = byteswap32(bits);
        const float value = std::bit_cast<float>(bits);
        if (channels == 3) {
          img.at(x, y, k) = value;
        } else {
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = value;
        }
      }
    }
  }
  return img;
}

void write_pfm(const std::filesystem::path& path, const RenderImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "PF\n" << image.width << " " << image.height << "\n-1.0\n";
  std::vector<char> row(static_cast<std::size_t>(image.width) * 12);
  for (int y = image.height - 1; y >= 0; --y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(image.at(x, y, c));
        if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
        std::memcpy(row.data() + (static_cast<std::size_t>(x) * 3 + c) * 4, &bits, 4);
      }
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

EnvMap read_envmap(const std::filesystem::path& path) {
  RenderImage img = read_pfm(path);
  if (img.width != 2 * img.height)
    throw ValidationError("panorama " + path.string() + " is not 2:1 equirectangular");
  if (std::string why = describe_invalid_radiance(img.data); !why.empty())
    throw ValidationError(path.string() + ": " + why);
  return EnvMap(img.height, std::move(img.data));
}

void write_envmap(const std::filesystem::path& path, const EnvMap& env) {
  write_pfm(path, to_render_image(env));
}

RenderImage to_render_image(const EnvMap& env) {
  RenderImage img(env.width(), env.height());
  std::copy(env.data().begin(), env.data().end(), img.data.begin());
  return img;
}

LdrImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  const std::string file = path.string();
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + file);
    unsigned char sig[8] = {};
    probe.read(reinterpret_cast<char*>(sig), 8);
    if (probe.gcount() < 8 || png_sig_cmp(sig, 0, 8) != 0)
      throw UnsupportedFormat("not a PNG file: " + file);
  }
  if (!png_image_begin_read_from_file(&image, file.c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw MalformedHeader("PNG header error in " + file + ": " + msg);
  }
  image.format = PNG_FORMAT_RGB;
  LdrImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw TruncatedPayload("PNG payload error in " + file + ": " + msg);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const LdrImage& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  const std::string file = path.string();
  if (!png_image_write_to_file(&png, file.c_str(), 0, image.data.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IoError("PNG write failed for " + file + ": " + msg);
  }
}

}  // namespace skylm
