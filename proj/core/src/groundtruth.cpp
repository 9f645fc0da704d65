#include "evmotion/groundtruth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "evmotion/errors.hpp"

namespace evmotion {
namespace {

Vec3 rotation_log(const Eigen::Quaterniond& q) {
  const Eigen::AngleAxisd aa(q);
  return aa.angle() * aa.axis();
}

RigidTransform object_in_camera(const Trajectory& object, const Trajectory& camera,
                                const RigidTransform& extrinsic, double t) {
  return extrinsic * interpolate_pose(camera, t).inverse() * interpolate_pose(object, t);
}

Pose6 relative_velocity_between(const Trajectory& object, const Trajectory& camera,
                                const RigidTransform& extrinsic, double lo, double hi) {
  const RigidTransform a = object_in_camera(object, camera, extrinsic, lo);
  const RigidTransform b = object_in_camera(object, camera, extrinsic, hi);
  const double span = hi - lo;
  return {(b.translation - a.translation) / span,
          rotation_log(b.rotation * a.rotation.inverse()) / span};
}

Pose6 camera_velocity_between(const Trajectory& camera, const RigidTransform& extrinsic,
                              double t, double lo, double hi) {
  const RigidTransform c_inv = extrinsic.inverse();
  const RigidTransform a = interpolate_pose(camera, lo) * c_inv;
  const RigidTransform b = interpolate_pose(camera, hi) * c_inv;
  const RigidTransform mid = interpolate_pose(camera, t) * c_inv;
  const double span = hi - lo;
  return {mid.rotation.inverse() * (b.translation - a.translation) / span,
          rotation_log(a.rotation.inverse() * b.rotation) / span};
}

void require_window(const Trajectory& traj, double t, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("velocity step dt must be positive");
  if (!traj.covers(t - dt) || !traj.covers(t + dt)) {
    throw InvalidArgument("velocity window [t - dt, t + dt] leaves the trajectory span");
  }
}

}  // namespace

RigidTransform RigidTransform::inverse() const {
  const Eigen::Quaterniond r = rotation.conjugate();
  return {r, -(r * translation)};
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.toRotationMatrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Trajectory::Trajectory(std::vector<PoseSample> samples) : samples_(std::move(samples)) {
  if (samples_.size() < 2) throw InvalidArgument("trajectory needs at least 2 samples");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    PoseSample& s = samples_[i];
    if (!std::isfinite(s.t) || (i > 0 && !(s.t > samples_[i - 1].t))) {
      throw InvalidArgument("trajectory times must be finite and strictly increasing");
    }
    const double norm = s.pose.rotation.norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
      throw InvalidArgument("trajectory quaternion at sample " + std::to_string(i) +
                            " is not unit length");
    }
    if (!s.pose.translation.allFinite()) throw InvalidArgument("non-finite translation");
    s.pose.rotation.normalize();
    if (i > 0 && s.pose.rotation.dot(samples_[i - 1].pose.rotation) < 0.0) {
      s.pose.rotation.coeffs() *= -1.0;
    }
  }
}

RigidTransform interpolate_pose(const Trajectory& trajectory, double t) {
  const auto& s = trajectory.samples();
  if (s.empty() || !trajectory.covers(t)) {
    throw InvalidArgument("time " + std::to_string(t) + " outside trajectory span");
  }
  const auto hi = std::lower_bound(s.begin(), s.end(), t,
                                   [](const PoseSample& p, double v) { return p.t < v; });
  if (hi->t == t) return hi->pose;
  const auto lo = hi - 1;
  const double a = (t - lo->t) / (hi->t - lo->t);
  RigidTransform out;
  out.translation = (1.0 - a) * lo->pose.translation + a * hi->pose.translation;
  out.rotation = lo->pose.rotation.slerp(a, hi->pose.rotation).normalized();
  return out;
}

void Scene::validate() const {
  K.validate();
  if (objects.empty()) throw InvalidArgument("scene has no point clouds");
  if (splat_size < 1 || splat_size > 3) throw InvalidArgument("splat size must be 1, 2 or 3");
  for (const SceneObject& o : objects) {
    if (o.cloud.points.empty()) throw InvalidArgument("point cloud is empty");
    if (o.cloud.object_id < 0 || o.cloud.object_id >= kEmptyId) {
      throw InvalidArgument("object ids must be in [0, 254]");
    }
    if (o.trajectory.samples().size() < 2) throw InvalidArgument("object has no trajectory");
  }
  if (camera.samples().size() < 2) throw InvalidArgument("camera has no trajectory");
  const auto [t0, t1] = common_span();
  if (!(t1 > t0)) throw InvalidArgument("trajectories do not overlap in time");
}

std::pair<double, double> Scene::common_span() const {
  double t0 = camera.t_begin();
  double t1 = camera.t_end();
  for (const SceneObject& o : objects) {
    t0 = std::max(t0, o.trajectory.t_begin());
    t1 = std::min(t1, o.trajectory.t_end());
  }
  return {t0, t1};
}

RigidTransform camera_from_world(const Scene& scene, double t) {
  return scene.extrinsic * interpolate_pose(scene.camera, t).inverse();
}

GtFrame project_cloud(const Scene& scene, double t) {
  scene.validate();
  const CameraIntrinsics& K = scene.K;
  const SensorGeometry g = K.geometry();
  if (!scene.camera.covers(t)) throw InvalidArgument("camera trajectory does not cover t");

  std::vector<double> zbuf(g.pixels(), std::numeric_limits<double>::infinity());
  Mask mask(g, kEmptyId);
  const RigidTransform cam_from_world = camera_from_world(scene, t);
  const int lo = -(scene.splat_size - 1) / 2;
  const int hi = lo + scene.splat_size - 1;

  for (const SceneObject& o : scene.objects) {
    if (!o.trajectory.covers(t)) {
      throw InvalidArgument("trajectory gap at t for object " + std::to_string(o.cloud.object_id));
    }
    const RigidTransform cam_from_obj = cam_from_world * interpolate_pose(o.trajectory, t);
    const auto id = static_cast<std::uint8_t>(o.cloud.object_id);
    for (const Vec3& p : o.cloud.points) {
      const Vec3 X = cam_from_obj * p;
      const double Z = X.z();
      if (!(Z > 0.0)) continue;
      const double px = K.fx * X.x() / Z + K.cx;
      const double py = K.fy * X.y() / Z + K.cy;
      if (!std::isfinite(px) || !std::isfinite(py)) continue;
      const double fx = std::floor(px + 0.5);
      const double fy = std::floor(py + 0.5);
      if (fx < -4.0 || fy < -4.0 || fx > g.width + 4.0 || fy > g.height + 4.0) continue;
      const int cx = static_cast<int>(fx);
      const int cy = static_cast<int>(fy);
      for (int dy = lo; dy <= hi; ++dy) {
        for (int dx = lo; dx <= hi; ++dx) {
          const int x = cx + dx;
          const int y = cy + dy;
          if (!g.contains(x, y)) continue;
          const std::size_t i = g.index(x, y);
          if (Z < zbuf[i] || (Z == zbuf[i] && id < mask[i])) {
            zbuf[i] = Z;
            mask[i] = id;
          }
        }
      }
    }
  }

  GtFrame frame;
  frame.t = t;
  frame.depth = DepthMap(g);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const double z = zbuf[g.index(x, y)];
      if (std::isfinite(z)) frame.depth.set(x, y, z);
    }
  }
  frame.mask = std::move(mask);
  return frame;
}

Pose6 finite_velocity(const Trajectory& object, const Trajectory& camera, double t, double dt,
                      const RigidTransform& extrinsic) {
  require_window(object, t, dt);
  require_window(camera, t, dt);
  return relative_velocity_between(object, camera, extrinsic, t - dt, t + dt);
}

Pose6 camera_velocity(const Trajectory& camera, double t, double dt,
                      const RigidTransform& extrinsic) {
  require_window(camera, t, dt);
  return camera_velocity_between(camera, extrinsic, t, t - dt, t + dt);
}

std::vector<GtFrame> generate_frames(const Scene& scene, double fps, const FrameOptions& options) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InvalidArgument("fps must be positive");
  if (!(options.velocity_dt > 0.0)) throw InvalidArgument("velocity_dt must be positive");
  scene.validate();
  const auto [t0, t1] = scene.common_span();
  const double count_f = std::floor((t1 - t0) * fps + 1e-9);
  if (count_f < 1.0) throw InsufficientData("common trajectory span shorter than one frame");
  const auto count = static_cast<std::size_t>(count_f);

  std::vector<GtFrame> frames;
  frames.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t0 + static_cast<double>(k) / fps;
    GtFrame frame = project_cloud(scene, t);
    const double lo = std::max(t - options.velocity_dt, t0);
    const double hi = std::min(t + options.velocity_dt, t1);
    frame.cam_velocity = camera_velocity_between(scene.camera, scene.extrinsic, t, lo, hi);
    for (const SceneObject& o : scene.objects) {
      frame.object_velocities[o.cloud.object_id] =
          relative_velocity_between(o.trajectory, scene.camera, scene.extrinsic, lo, hi).v;
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace evmotion
