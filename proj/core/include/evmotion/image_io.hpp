#pragma once

#include <filesystem>

#include "evmotion/geometry.hpp"
#include "evmotion/image.hpp"

namespace evmotion {

// PFM: little-endian 32-bit float ("Pf", scale -1), rows stored bottom to top.
void write_pfm(const std::filesystem::path& path, const Image<float>& image);
Image<float> read_pfm(const std::filesystem::path& path);

/// Depth in meters with 0 marking invalid pixels.
void write_depth_pfm(const std::filesystem::path& path, const DepthMap& depth);
DepthMap read_depth_pfm(const std::filesystem::path& path);

// Binary 8-bit PGM (P5, maxval 255), rows top to bottom.
void write_pgm(const std::filesystem::path& path, const Mask& image);
Mask read_pgm(const std::filesystem::path& path);

/// round(value * scale) clamped to [0, 255].
Mask to_gray(const Image<double>& image, double scale);

}  // namespace evmotion
