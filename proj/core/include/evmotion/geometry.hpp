#pragma once

#include <cstddef>
#include <filesystem>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "evmotion/image.hpp"

namespace evmotion {

using Vec3 = Eigen::Vector3d;
using FlowMatrix = Eigen::Matrix<double, 2, 6>;

/// Pinhole intrinsics for rectified images.
struct CameraIntrinsics {
  double fx = 200.0;
  double fy = 200.0;
  double cx = 173.0;
  double cy = 130.0;
  int width = 346;
  int height = 260;

  SensorGeometry geometry() const { return {width, height}; }
  /// Throws InvalidArgument unless fx, fy > 0 and the principal point is on the sensor.
  void validate() const;
};

/// Parses `fx fy cx cy width height` (one line, `#` comments allowed).
CameraIntrinsics parse_intrinsics(std::string_view text);
CameraIntrinsics load_intrinsics(const std::filesystem::path& path);
void save_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& K);

/// Rigid velocity (v, omega): scene points move as dX/dt = -v - omega x X in
/// the camera frame, i.e. v and omega are the camera's own velocities.
struct Pose6 {
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();

  bool finite() const { return v.allFinite() && omega.allFinite(); }
  Eigen::Matrix<double, 6, 1> vector() const;
  static Pose6 from_vector(const Eigen::Matrix<double, 6, 1>& p);

  friend Pose6 operator+(const Pose6& a, const Pose6& b) {
    return {a.v + b.v, a.omega + b.omega};
  }
  friend bool operator==(const Pose6& a, const Pose6& b) {
    return a.v == b.v && a.omega == b.omega;
  }
};

struct NormalizedPoint {
  double x = 0.0;
  double y = 0.0;
};

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

inline NormalizedPoint normalize_coords(double px, double py, const CameraIntrinsics& K) {
  return {(px - K.cx) / K.fx, (py - K.cy) / K.fy};
}

inline PixelPoint denormalize_coords(double x, double y, const CameraIntrinsics& K) {
  return {x * K.fx + K.cx, y * K.fy + K.cy};
}

/// Image velocity in normalized units per second.
struct ImageVelocity {
  double u = 0.0;
  double v = 0.0;
};

/// The 2x6 matrix A(x, y, Z) mapping (v, omega) to normalized image velocity.
FlowMatrix flow_matrix(double x, double y, double Z);

/// Instantaneous image motion of a point at normalized (x, y) and depth Z > 0.
ImageVelocity flow_at(double x, double y, double Z, const Pose6& pose);

/// Per-pixel metric depth with an explicit validity mask.
class DepthMap {
 public:
  DepthMap() = default;
  /// All pixels invalid.
  explicit DepthMap(SensorGeometry geometry);

  /// Pixels with non-finite or non-positive values become invalid.
  static DepthMap from_values(const Image<double>& values);
  static DepthMap constant(SensorGeometry geometry, double depth);

  SensorGeometry geometry() const { return depth_.geometry(); }
  bool valid(std::size_t i) const { return valid_[i] != 0; }
  bool valid(int x, int y) const { return valid_(x, y) != 0; }
  double operator[](std::size_t i) const { return depth_[i]; }
  double operator()(int x, int y) const { return depth_(x, y); }

  void set(int x, int y, double depth);
  void invalidate(int x, int y);

  std::size_t valid_count() const;
  /// Mean over valid pixels; throws InsufficientData if none.
  double mean_valid() const;
  /// Copy divided by mean_valid(), so the mean valid depth is 1.
  DepthMap normalized_by_mean() const;
  DepthMap scaled(double s) const;

  const Image<double>& values() const { return depth_; }
  const Mask& validity() const { return valid_; }

 private:
  Image<double> depth_;
  Mask valid_;
};

/// Per-pixel mixture of the ego pose and C object translations. Weights are
/// stored pixel-major: weight(i, j) for component j in [0, C].
class MixturePoseField {
 public:
  /// Throws InvalidArgument unless weights are non-negative, sized
  /// (C + 1) * pixels and sum to 1 within 1e-6 per pixel.
  MixturePoseField(Pose6 ego, std::vector<Vec3> object_translations, SensorGeometry geometry,
                   std::vector<double> weights);

  /// C = 0: every pixel follows the ego pose.
  static MixturePoseField ego_only(const Pose6& ego, SensorGeometry geometry);

  const Pose6& ego() const { return ego_; }
  const std::vector<Vec3>& object_translations() const { return translations_; }
  std::size_t components() const { return translations_.size() + 1; }
  SensorGeometry geometry() const { return geometry_; }
  double weight(std::size_t pixel, std::size_t component) const {
    return weights_[pixel * components() + component];
  }
  std::span<const double> weights() const { return weights_; }

 private:
  Pose6 ego_;
  std::vector<Vec3> translations_;
  SensorGeometry geometry_;
  std::vector<double> weights_;
};

/// Ego pose plus the weighted object translations at pixel `i`; objects do not rotate.
Pose6 pixel_pose(const MixturePoseField& field, std::size_t i);

/// Dense image velocity in pixels per second.
struct FlowField {
  FlowField() = default;
  explicit FlowField(SensorGeometry geometry) : u(geometry), v(geometry), valid(geometry, 0) {}

  SensorGeometry geometry() const { return u.geometry(); }

  Image<double> u;
  Image<double> v;
  Mask valid;
};

FlowField flow_field(const DepthMap& depth, const MixturePoseField& field,
                     const CameraIntrinsics& K);
FlowField flow_field(const DepthMap& depth, const Pose6& pose, const CameraIntrinsics& K);

}  // namespace evmotion
