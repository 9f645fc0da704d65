#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace evmotion {

/// Sensor resolution in pixels. Pixel (x, y) has its center at integer coordinates.
struct SensorGeometry {
  int width = 346;
  int height = 260;

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  std::size_t pixels() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

/// Row-major single-channel image.
template <typename T>
class Image {
 public:
  Image() = default;
  explicit Image(SensorGeometry geometry, T fill = T{})
      : geometry_(geometry), data_(geometry.pixels(), fill) {}
  Image(int width, int height, T fill = T{})
      : Image(SensorGeometry{width, height}, fill) {}

  int width() const { return geometry_.width; }
  int height() const { return geometry_.height; }
  SensorGeometry geometry() const { return geometry_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[geometry_.index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[geometry_.index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  SensorGeometry geometry_{0, 0};
  std::vector<T> data_;
};

using Mask = Image<unsigned char>;

}  // namespace evmotion
