#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "evmotion/errors.hpp"
#include "evmotion/groundtruth.hpp"

namespace ev = evmotion;
using ev::Vec3;
using Eigen::AngleAxisd;
using Eigen::Quaterniond;

namespace {

ev::Trajectory still(double t0 = 0.0, double t1 = 1.0) {
  return ev::Trajectory({{t0, {}}, {t1, {}}});
}

ev::Trajectory linear(Vec3 velocity, double t0 = 0.0, double t1 = 1.0, int samples = 11) {
  std::vector<ev::PoseSample> s;
  for (int k = 0; k < samples; ++k) {
    const double t = t0 + (t1 - t0) * k / (samples - 1);
    s.push_back({t, {Quaterniond::Identity(), velocity * t}});
  }
  return ev::Trajectory(std::move(s));
}

ev::Scene single_point_scene(std::vector<std::pair<Vec3, int>> points) {
  ev::Scene scene;
  scene.camera = still();
  for (auto& [p, id] : points) {
    ev::SceneObject o;
    o.cloud.points = {p};
    o.cloud.object_id = id;
    o.trajectory = still();
    scene.objects.push_back(o);
  }
  return scene;
}

}  // namespace

TEST(InterpolatePose, ExactAtSamples) {
  ev::RigidTransform a{Quaterniond(AngleAxisd(0.3, Vec3(1, 2, 3).normalized())), Vec3(1, 2, 3)};
  ev::RigidTransform b{Quaterniond(AngleAxisd(-0.2, Vec3::UnitY())), Vec3(-1, 0, 5)};
  ev::Trajectory tr({{0.1, a}, {0.35, b}});
  auto p = ev::interpolate_pose(tr, 0.35);
  EXPECT_EQ(p.translation, tr.samples()[1].pose.translation);
  EXPECT_EQ(p.rotation.coeffs(), tr.samples()[1].pose.rotation.coeffs());
  EXPECT_EQ(ev::interpolate_pose(tr, 0.1).translation, tr.samples()[0].pose.translation);
}

TEST(InterpolatePose, LinearMidpoint) {
  ev::Trajectory tr({{0.0, {}}, {1.0, {Quaterniond::Identity(), Vec3(2, 0, 0)}}});
  EXPECT_TRUE(ev::interpolate_pose(tr, 0.5).translation.isApprox(Vec3(1, 0, 0)));
}

TEST(InterpolatePose, ShortestArcHalfway) {
  const Quaterniond quarter(AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()));
  ev::Trajectory tr({{0.0, {}}, {1.0, {quarter, Vec3::Zero()}}});
  auto p = ev::interpolate_pose(tr, 0.5);
  EXPECT_NEAR(p.rotation.angularDistance(Quaterniond(AngleAxisd(std::numbers::pi / 4, Vec3::UnitZ()))),
              0.0, 1e-12);

  // The same rotation stored with the opposite sign still takes the short way.
  Quaterniond flipped = quarter;
  flipped.coeffs() *= -1.0;
  ev::Trajectory tf({{0.0, {}}, {1.0, {flipped, Vec3::Zero()}}});
  EXPECT_NEAR(ev::interpolate_pose(tf, 0.5).rotation.angularDistance(p.rotation), 0.0, 1e-12);
}

TEST(InterpolatePose, ContinuousAtSampleBoundaries) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ev::PoseSample> s;
  for (int k = 0; k < 6; ++k) {
    s.push_back({0.005 * k,
                 {Quaterniond(AngleAxisd(u(rng), Vec3(u(rng), u(rng), u(rng)).normalized())),
                  Vec3(u(rng), u(rng), u(rng))}});
  }
  ev::Trajectory tr(s);
  for (int k = 1; k < 5; ++k) {
    const double t = 0.005 * k;
    for (double eps : {1e-6, 1e-9}) {
      auto a = ev::interpolate_pose(tr, t - eps), b = ev::interpolate_pose(tr, t + eps);
      EXPECT_LT((a.translation - b.translation).norm(), 1e3 * eps);
      EXPECT_LT(a.rotation.angularDistance(b.rotation), 1e3 * eps);
    }
  }
}

TEST(InterpolatePose, OutsideSpanThrows) {
  auto tr = still(0.0, 1.0);
  EXPECT_THROW(ev::interpolate_pose(tr, 1.5), ev::InvalidArgument);
  EXPECT_THROW(ev::interpolate_pose(tr, -0.1), ev::InvalidArgument);
}

TEST(Trajectory, RejectsBadSamples) {
  EXPECT_THROW(ev::Trajectory(std::vector<ev::PoseSample>{{0.0, {}}}), ev::InvalidArgument);
  EXPECT_THROW(ev::Trajectory({{0.0, {}}, {0.0, {}}}), ev::InvalidArgument);
  ev::RigidTransform bad;
  bad.rotation.coeffs() << 0, 0, 0, 2;
  EXPECT_THROW(ev::Trajectory({{0.0, {}}, {1.0, bad}}), ev::InvalidArgument);
}

TEST(ProjectCloud, PointOnAxis) {
  auto scene = single_point_scene({{Vec3(0, 0, 2), 3}});
  auto f = ev::project_cloud(scene, 0.5);
  const int cx = static_cast<int>(scene.K.cx), cy = static_cast<int>(scene.K.cy);
  ASSERT_TRUE(f.depth.valid(cx, cy));
  EXPECT_DOUBLE_EQ(f.depth(cx, cy), 2.0);
  EXPECT_EQ(f.mask(cx, cy), 3);
  EXPECT_EQ(f.depth.valid_count(), 1u);
  EXPECT_EQ(f.mask(0, 0), ev::kEmptyId);
}

TEST(ProjectCloud, ZBufferKeepsNearest) {
  auto scene = single_point_scene({{Vec3(0, 0, 2), 1}, {Vec3(0, 0, 1), 2}});
  auto f = ev::project_cloud(scene, 0.0);
  const int cx = static_cast<int>(scene.K.cx), cy = static_cast<int>(scene.K.cy);
  EXPECT_DOUBLE_EQ(f.depth(cx, cy), 1.0);
  EXPECT_EQ(f.mask(cx, cy), 2);
}

TEST(ProjectCloud, EqualDepthLowerIdWins) {
  auto scene = single_point_scene({{Vec3(0, 0, 2), 7}, {Vec3(0, 0, 2), 4}});
  auto f = ev::project_cloud(scene, 0.0);
  EXPECT_EQ(f.mask(static_cast<int>(scene.K.cx), static_cast<int>(scene.K.cy)), 4);
}

TEST(ProjectCloud, BehindCameraDiscarded) {
  auto scene = single_point_scene({{Vec3(0, 0, -2), 1}});
  auto f = ev::project_cloud(scene, 0.0);
  EXPECT_EQ(f.depth.valid_count(), 0u);
}

TEST(ProjectCloud, SplatFootprint) {
  auto scene = single_point_scene({{Vec3(0, 0, 2), 1}});
  scene.splat_size = 3;
  EXPECT_EQ(ev::project_cloud(scene, 0.0).depth.valid_count(), 9u);
  scene.splat_size = 2;
  EXPECT_EQ(ev::project_cloud(scene, 0.0).depth.valid_count(), 4u);
}

// Camera 1 m to the right of the world origin and an extrinsic offset: the
// rendered point must match the transform chain evaluated by hand.
TEST(ProjectCloud, TransformChain) {
  ev::Scene scene = single_point_scene({{Vec3(0.2, -0.1, 0.3), 5}});
  const ev::RigidTransform cam{Quaterniond(AngleAxisd(0.1, Vec3::UnitY())), Vec3(1, 0, -2)};
  scene.camera = ev::Trajectory({{0.0, cam}, {1.0, cam}});
  const ev::RigidTransform obj{Quaterniond(AngleAxisd(-0.3, Vec3::UnitZ())), Vec3(1.2, 0.1, 1)};
  scene.objects[0].trajectory = ev::Trajectory({{0.0, obj}, {1.0, obj}});
  scene.extrinsic = {Quaterniond(AngleAxisd(0.05, Vec3::UnitX())), Vec3(0.01, 0.02, 0.0)};

  const Eigen::Matrix4d chain =
      scene.extrinsic.matrix() * cam.matrix().inverse() * obj.matrix();
  const Eigen::Vector4d X = chain * Eigen::Vector4d(0.2, -0.1, 0.3, 1.0);
  const double px = scene.K.fx * X.x() / X.z() + scene.K.cx;
  const double py = scene.K.fy * X.y() / X.z() + scene.K.cy;
  auto f = ev::project_cloud(scene, 0.5);
  const int ix = static_cast<int>(std::lround(px)), iy = static_cast<int>(std::lround(py));
  ASSERT_TRUE(f.depth.valid(ix, iy));
  EXPECT_NEAR(f.depth(ix, iy), X.z(), 1e-12);
  EXPECT_EQ(f.mask(ix, iy), 5);

  // Back-projecting the stored depth lands within half a pixel of the point.
  const Vec3 back((ix - scene.K.cx) / scene.K.fx * f.depth(ix, iy),
                  (iy - scene.K.cy) / scene.K.fy * f.depth(ix, iy), f.depth(ix, iy));
  EXPECT_LE(std::abs(back.x() / back.z() * scene.K.fx - X.x() / X.z() * scene.K.fx), 0.5);
  EXPECT_LE(std::abs(back.y() / back.z() * scene.K.fy - X.y() / X.z() * scene.K.fy), 0.5);
}

TEST(FiniteVelocity, StaticObjectMovingCamera) {
  auto v = ev::finite_velocity(still(), linear(Vec3(1, 0, 0)), 0.5, 0.0025);
  EXPECT_TRUE(v.v.isApprox(Vec3(-1, 0, 0), 1e-9));
  EXPECT_LT(v.omega.norm(), 1e-12);
}

TEST(FiniteVelocity, IndependentOfStepForLinearMotion) {
  auto obj = linear(Vec3(0.3, -0.2, 0.5));
  auto cam = linear(Vec3(-0.1, 0.4, 0.0));
  auto ref = ev::finite_velocity(obj, cam, 0.5, 0.001);
  for (double dt : {0.002, 0.005, 0.01}) {
    auto v = ev::finite_velocity(obj, cam, 0.5, dt);
    EXPECT_LT((v.v - ref.v).norm(), 1e-6);
  }
  EXPECT_TRUE(ref.v.isApprox(Vec3(0.4, -0.6, 0.5), 1e-9));
}

TEST(FiniteVelocity, IdenticalStationaryIsZero) {
  auto v = ev::finite_velocity(still(), still(), 0.5, 0.0025);
  EXPECT_EQ(v.v, Vec3::Zero());
  EXPECT_EQ(v.omega, Vec3::Zero());
}

TEST(FiniteVelocity, WindowOutsideSpanThrows) {
  EXPECT_THROW(ev::finite_velocity(still(), still(), 0.999, 0.0025), ev::InvalidArgument);
}

TEST(CameraVelocity, SpinningCamera) {
  // Camera yawing at 0.4 rad/s about its own y axis and moving along its z.
  std::vector<ev::PoseSample> s;
  for (int k = 0; k <= 200; ++k) {
    const double t = k * 0.005;
    const Quaterniond q(AngleAxisd(0.4 * t, Vec3::UnitY()));
    s.push_back({t, {q, q * Vec3(0, 0, 0.5 * t)}});
  }
  ev::Trajectory cam(s);
  auto v = ev::camera_velocity(cam, 0.5, 0.0025);
  EXPECT_NEAR(v.omega.y(), 0.4, 1e-9);
  EXPECT_NEAR(v.omega.x(), 0.0, 1e-9);
  EXPECT_NEAR(v.v.z(), 0.5, 1e-3);
}

TEST(GenerateFrames, FortyPerSecond) {
  auto scene = single_point_scene({{Vec3(0, 0, 2), 1}});
  EXPECT_EQ(ev::generate_frames(scene, 40.0).size(), 40u);
  scene.camera = still(0.0, 0.5);
  EXPECT_EQ(ev::generate_frames(scene, 40.0).size(), 20u);
  EXPECT_THROW(ev::generate_frames(scene, 0.0), ev::InvalidArgument);
}

TEST(GenerateFrames, UniformTimesAndVelocities) {
  auto scene = single_point_scene({{Vec3(0, 0, 2), 1}});
  scene.camera = linear(Vec3(1, 0, 0));
  auto frames = ev::generate_frames(scene, 40.0);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    EXPECT_DOUBLE_EQ(frames[k].t, k / 40.0);
    EXPECT_TRUE(frames[k].cam_velocity.v.isApprox(Vec3(1, 0, 0), 1e-9));
    EXPECT_TRUE(frames[k].object_velocities.at(1).isApprox(Vec3(-1, 0, 0), 1e-9));
  }
}

TEST(Scene, ValidationAndSpan) {
  auto scene = single_point_scene({{Vec3(0, 0, 2), 1}});
  scene.objects[0].trajectory = still(0.2, 0.8);
  auto [t0, t1] = scene.common_span();
  EXPECT_EQ(t0, 0.2);
  EXPECT_EQ(t1, 0.8);
  scene.objects[0].trajectory = still(2.0, 3.0);
  EXPECT_THROW(scene.validate(), ev::InvalidArgument);
  scene = single_point_scene({{Vec3(0, 0, 2), 255}});
  EXPECT_THROW(scene.validate(), ev::InvalidArgument);
}
