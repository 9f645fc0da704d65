#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "evmotion/compensator.hpp"
#include "evmotion/events.hpp"
#include "evmotion/geometry.hpp"
#include "evmotion/warping.hpp"

namespace evmotion {

enum class MotionModel {
  kSixDof,         // (vx, vy, vz, wx, wy, wz)
  kFourDofPlanar,  // (vx, vy, vz, wz) against a constant-depth plane
};

enum class DepthSource {
  kGroundTruth,    // use the supplied depth map as is
  kConstantPlane,  // ignore it; fronto-parallel plane at `plane_depth`
};

MotionModel parse_motion_model(std::string_view name);
DepthSource parse_depth_source(std::string_view name);
std::string_view to_string(MotionModel m);
std::string_view to_string(DepthSource d);

struct EstimatorConfig {
  MotionModel mode = MotionModel::kSixDof;
  int max_iters = 600;
  double tol = 1e-7;
  LossWeights loss_weights;
  int multistart = 5;
  DepthSource depth_source = DepthSource::kGroundTruth;
  double plane_depth = 1.0;

  double fine_dt = 1e-3;
  Splat splat = Splat::kNearest;
  double coarse_weight = 1.0;
  double fine_weight = 1.0;
  double out_of_bounds_penalty = 1.0;

  /// Initial simplex offsets; the translation step is multiplied by the
  /// mean scene depth so it is expressed in normalized units.
  double translation_step = 0.3;
  double rotation_step = 0.3;
  /// Radius of the ball restarts are drawn from (same units as the steps).
  double restart_translation_radius = 0.5;
  double restart_rotation_radius = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EstimateResult {
  Pose6 pose;
  double objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  WarpDiagnostics diagnostics;
  CompensationLosses losses;
  std::vector<double> history;  // best objective per iteration of the winning start
};

/// Minimum number of events in the window for egomotion estimation.
inline constexpr std::size_t kMinEgomotionEvents = 10;
/// Minimum number of object events for velocity estimation.
inline constexpr std::size_t kMinObjectEvents = 20;

/// Warping objective over a set of slices; the value is a pure function of
/// the parameters (bit-identical across calls).
class EgomotionObjective {
 public:
  EgomotionObjective(std::span<const EventSlice> slices, const DepthMap& depth,
                     const CameraIntrinsics& K, const EstimatorConfig& config);

  std::size_t dimension() const;
  Pose6 to_pose(std::span<const double> params) const;
  std::vector<double> to_params(const Pose6& pose) const;

  double operator()(std::span<const double> params) const;
  double operator()(const Pose6& pose) const;
  CompensationLosses losses(const Pose6& pose) const;

  const MotionCompensator& compensator() const { return compensator_; }
  double depth_scale() const { return depth_scale_; }

 private:
  MotionModel mode_;
  MotionCompensator compensator_;
  double depth_scale_;
  mutable MotionCompensator::Workspace workspace_;
};

/// Camera velocity minimizing coarse + fine warping losses over 3 or 5
/// consecutive slices under a rigid background. With a constant-plane depth
/// source the translation is only known up to the plane depth scale.
EstimateResult estimate_egomotion(std::span<const EventSlice> slices, const DepthMap& depth,
                                  const CameraIntrinsics& K, const EstimatorConfig& config);

struct ObjectEstimate {
  /// Residual translation t_j added to the ego translation on object pixels.
  Vec3 translation = Vec3::Zero();
  /// Translational velocity of the object relative to the camera, in the
  /// camera frame: -(v_ego + t_j). Excludes rotation-induced motion.
  Vec3 velocity = Vec3::Zero();
  double objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::size_t events = 0;
};

/// Residual object translation with the ego pose fixed, using only events
/// whose source pixel lies inside `mask` (non-zero).
ObjectEstimate estimate_object_velocity(std::span<const EventSlice> slices,
                                        const DepthMap& depth, const CameraIntrinsics& K,
                                        const Mask& mask, const Pose6& ego,
                                        const EstimatorConfig& config);

}  // namespace evmotion
