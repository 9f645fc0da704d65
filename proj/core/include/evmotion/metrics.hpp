#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include <Eigen/Geometry>

#include "evmotion/geometry.hpp"
#include "evmotion/image.hpp"

namespace evmotion {

struct DepthMetrics {
  double abs_rel = 0.0;
  double rmse_log = 0.0;
  double silog = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t pixels = 0;  // shared valid pixels used
  double scale = 1.0;      // factor applied to the prediction
};

struct MotionMetrics {
  double aee = 0.0;  // m/s
  double rre = 0.0;  // rad/s
};

enum class DepthAlignment { kMedian, kMean, kNone };

DepthAlignment parse_depth_alignment(std::string_view name);
std::string_view to_string(DepthAlignment a);

/// Mean of |s * pred - gt|. With `scale_from_gt`, s is the least-squares
/// factor sum<pred, gt> / sum<pred, pred>; otherwise s = 1.
double aee(std::span<const Vec3> pred, std::span<const Vec3> gt, bool scale_from_gt);

/// Least-squares scale used by aee().
double aee_scale(std::span<const Vec3> pred, std::span<const Vec3> gt);

/// Geodesic angle theta of R_pred^T R_gt, the magnitude of the axis-angle
/// vector of its matrix logarithm. The Frobenius norm of logm is sqrt(2) * theta.
double rre(const Eigen::Matrix3d& pred, const Eigen::Matrix3d& gt);
double rre(const Eigen::Quaterniond& pred, const Eigen::Quaterniond& gt);

inline constexpr double kFrobeniusPerAxisAngle = 1.4142135623730951;

/// Rotation error between angular velocities: the rotations exp(w * dt) are
/// compared and the angle divided by dt, giving rad/s.
double rre_rate(const Vec3& omega_pred, const Vec3& omega_gt, double dt = 1.0);

/// |{pred >= threshold} & gt| / |{pred >= threshold} | gt|; 1 if both sets are empty.
double iou(const Image<double>& pred_weights, const Mask& gt, double threshold = 0.5);

/// Scale factor multiplied into pred before the depth metrics.
double depth_alignment_scale(const DepthMap& pred, const DepthMap& gt, DepthAlignment alignment);

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt,
                           DepthAlignment alignment = DepthAlignment::kMedian);

/// Equal-weight mean over frames. Throws InsufficientData when empty.
DepthMetrics mean_depth_metrics(std::span<const DepthMetrics> frames);
MotionMetrics mean_motion_metrics(std::span<const MotionMetrics> frames);

}  // namespace evmotion
