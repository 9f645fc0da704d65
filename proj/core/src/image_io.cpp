#include "evmotion/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "evmotion/errors.hpp"

namespace evmotion {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

// Reads the next whitespace-delimited header token, skipping `#` comments.
std::string header_token(std::istream& in, const std::filesystem::path& path) {
  std::string token;
  for (;;) {
    const int c = in.get();
    if (c == EOF) throw ParseError("truncated header in " + path.string(), 0);
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
}

int header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = header_token(in, path);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad header field '" + tok + "' in " + path.string(), 0);
  }
}

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const Image<float>& image) {
  auto out = open_out(path);
  out << "Pf\n" << image.width() << ' ' << image.height() << "\n-1.0\n";
  for (int y = image.height() - 1; y >= 0; --y) {
    for (int x = 0; x < image.width(); ++x) {
      const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(image(x, y)));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  if (!out) throw IoError("write failure on " + path.string());
}

Image<float> read_pfm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "Pf") throw ParseError(path.string() + " is not a gray PFM", 0);
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  const std::string scale_tok = header_token(in, path);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw ParseError("bad PFM scale in " + path.string(), 0);
  }
  if (scale == 0.0) throw ParseError("bad PFM scale in " + path.string(), 0);
  const bool little = scale < 0.0;

  Image<float> image(w, h);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      std::uint32_t bits = 0;
      if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
        throw ParseError("truncated PFM data in " + path.string(), 0);
      }
      if (little != (std::endian::native == std::endian::little)) {
        bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) |
               (bits >> 24);
      }
      image(x, y) = std::bit_cast<float>(bits);
    }
  }
  return image;
}

void write_depth_pfm(const std::filesystem::path& path, const DepthMap& depth) {
  Image<float> image(depth.geometry(), 0.0f);
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (depth.valid(i)) image[i] = static_cast<float>(depth[i]);
  }
  write_pfm(path, image);
}

DepthMap read_depth_pfm(const std::filesystem::path& path) {
  const Image<float> image = read_pfm(path);
  Image<double> values(image.geometry());
  for (std::size_t i = 0; i < image.size(); ++i) values[i] = image[i];
  return DepthMap::from_values(values);
}

void write_pgm(const std::filesystem::path& path, const Mask& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data().data()),
            static_cast<std::streamsize>(image.size()));
  if (!out) throw IoError("write failure on " + path.string());
}

Mask read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "P5") throw ParseError(path.string() + " is not a binary PGM", 0);
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  if (header_int(in, path) != 255) throw ParseError("only 8-bit PGM is supported", 0);
  Mask image(w, h);
  if (!in.read(reinterpret_cast<char*>(image.data().data()),
               static_cast<std::streamsize>(image.size()))) {
    throw ParseError("truncated PGM data in " + path.string(), 0);
  }
  return image;
}

Mask to_gray(const Image<double>& image, double scale) {
  Mask out(image.geometry(), 0);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::round(image[i] * scale);
    out[i] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

}  // namespace evmotion
