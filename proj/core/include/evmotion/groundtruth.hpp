#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Geometry>

#include "evmotion/geometry.hpp"
#include "evmotion/image.hpp"

namespace evmotion {

/// Rotation + translation mapping points from a source frame into a target frame.
struct RigidTransform {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  RigidTransform inverse() const;
  Eigen::Matrix4d matrix() const;

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return {(a.rotation * b.rotation).normalized(), a.rotation * b.translation + a.translation};
  }
};

struct PoseSample {
  double t = 0.0;
  RigidTransform pose;
};

/// Time-sorted poses of a tracked body (body frame -> world frame).
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws InvalidArgument unless >= 2 samples with strictly increasing
  /// times and unit quaternions (within 1e-6; renormalized). Consecutive
  /// quaternions are sign-flipped into the same hemisphere.
  explicit Trajectory(std::vector<PoseSample> samples);

  const std::vector<PoseSample>& samples() const { return samples_; }
  double t_begin() const { return samples_.front().t; }
  double t_end() const { return samples_.back().t; }
  bool covers(double t) const { return t >= t_begin() && t <= t_end(); }

 private:
  std::vector<PoseSample> samples_;
};

/// Linear translation and shortest-arc slerp between the bracketing samples;
/// returns the stored sample unchanged at a sample time.
RigidTransform interpolate_pose(const Trajectory& trajectory, double t);

inline constexpr std::uint8_t kBackgroundId = 0;
inline constexpr std::uint8_t kEmptyId = 255;

struct PointCloud {
  std::vector<Vec3> points;  // object-local frame, meters
  int object_id = kBackgroundId;
};

struct SceneObject {
  PointCloud cloud;
  Trajectory trajectory;  // object markers -> world
};

/// Everything needed to render depth and masks: X_cam = C * P_cam^-1 * P_obj * X.
struct Scene {
  std::vector<SceneObject> objects;
  Trajectory camera;                  // camera markers -> world
  RigidTransform extrinsic;           // camera markers -> camera centre (C)
  CameraIntrinsics K;
  int splat_size = 1;                 // square footprint side, 1..3 pixels

  /// Throws InvalidArgument on empty clouds, bad ids or non-overlapping trajectories.
  void validate() const;
  /// Intersection of all trajectory spans.
  std::pair<double, double> common_span() const;
};

struct GtFrame {
  double t = 0.0;
  DepthMap depth;
  Mask mask;            // object id per pixel; kEmptyId where nothing projects
  Pose6 cam_velocity;   // camera body velocity, camera frame
  std::map<int, Vec3> object_velocities;  // object origin velocity in the camera frame
};

/// Camera-from-world transform at time t: C * P_cam(t)^-1.
RigidTransform camera_from_world(const Scene& scene, double t);

/// Renders depth and mask at time t by z-buffered point splatting. Points at
/// camera depth <= 0 are discarded; equal depths go to the lower object id.
/// Velocities are left zero.
GtFrame project_cloud(const Scene& scene, double t);

/// Central difference of the relative pose camera <- object over [t - dt, t + dt]:
/// v is the derivative of the object origin in camera coordinates and omega the
/// axis-angle of the relative rotation change, both divided by 2 dt.
Pose6 finite_velocity(const Trajectory& object, const Trajectory& camera, double t, double dt,
                      const RigidTransform& extrinsic = RigidTransform::identity());

/// Camera body velocity (v, omega) in the camera frame by central differences.
Pose6 camera_velocity(const Trajectory& camera, double t, double dt,
                      const RigidTransform& extrinsic = RigidTransform::identity());

struct FrameOptions {
  double velocity_dt = 2.5e-3;  // half a 200 Hz pose interval
};

/// floor(span * fps) frames at t0 + k / fps over the common span. Near the
/// span ends the velocity window is clipped to stay inside the trajectories.
std::vector<GtFrame> generate_frames(const Scene& scene, double fps,
                                     const FrameOptions& options = {});

}  // namespace evmotion
