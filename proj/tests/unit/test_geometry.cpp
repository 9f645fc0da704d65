#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "evmotion/errors.hpp"
#include "evmotion/geometry.hpp"

namespace ev = evmotion;
using ev::Vec3;

namespace {

// Normalized image velocity by differencing the projection of a point moved
// along dX/dt = -v - omega x X for a short step.
ev::ImageVelocity projection_derivative(double x, double y, double Z, const ev::Pose6& p,
                                        double dt) {
  const Vec3 X(x * Z, y * Z, Z);
  const Vec3 dX = -p.v - p.omega.cross(X);
  const Vec3 a = X - 0.5 * dt * dX;
  const Vec3 b = X + 0.5 * dt * dX;
  return {(b.x() / b.z() - a.x() / a.z()) / dt, (b.y() / b.z() - a.y() / a.z()) / dt};
}

}  // namespace

TEST(Normalize, PrincipalPointAndUnit) {
  ev::CameraIntrinsics K;
  auto c = ev::normalize_coords(K.cx, K.cy, K);
  EXPECT_EQ(c.x, 0.0);
  EXPECT_EQ(c.y, 0.0);
  EXPECT_DOUBLE_EQ(ev::normalize_coords(K.cx + K.fx, K.cy, K).x, 1.0);
}

TEST(Normalize, RoundTrip) {
  ev::CameraIntrinsics K{312.5, 298.25, 170.5, 127.25, 346, 260};
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 346.0);
  for (int i = 0; i < 200; ++i) {
    const double px = u(rng), py = u(rng);
    auto n = ev::normalize_coords(px, py, K);
    auto d = ev::denormalize_coords(n.x, n.y, K);
    EXPECT_NEAR(d.x, px, 1e-12);
    EXPECT_NEAR(d.y, py, 1e-12);
  }
}

TEST(Intrinsics, ParseAndValidate) {
  auto K = ev::parse_intrinsics("# comment\n210 205.5 170 128 346 260\n");
  EXPECT_EQ(K.fx, 210.0);
  EXPECT_EQ(K.fy, 205.5);
  EXPECT_EQ(K.height, 260);
  EXPECT_THROW(ev::parse_intrinsics("1 2 3"), ev::ParseError);
  EXPECT_THROW(ev::parse_intrinsics("1 2 3 4 5 6 7"), ev::ParseError);
  ev::CameraIntrinsics bad;
  bad.fx = -1;
  EXPECT_THROW(bad.validate(), ev::InvalidArgument);
  bad = {};
  bad.cx = 400;
  EXPECT_THROW(bad.validate(), ev::InvalidArgument);
}

TEST(FlowAt, ForwardMotionAtCenterIsZero) {
  auto f = ev::flow_at(0, 0, 1.0, {Vec3(0, 0, 1), Vec3::Zero()});
  EXPECT_EQ(f.u, 0.0);
  EXPECT_EQ(f.v, 0.0);
}

TEST(FlowAt, LateralTranslation) {
  const ev::Pose6 p{Vec3(1, 0, 0), Vec3::Zero()};
  auto f = ev::flow_at(0, 0, 2.0, p);
  EXPECT_DOUBLE_EQ(f.u, -0.5);
  EXPECT_DOUBLE_EQ(f.v, 0.0);
  auto fd = projection_derivative(0, 0, 2.0, p, 1e-6);
  EXPECT_NEAR(fd.u, -0.5, 1e-8);
}

TEST(FlowAt, RollAboutOpticalAxis) {
  const ev::Pose6 p{Vec3::Zero(), Vec3(0, 0, 1)};
  for (double Z : {0.5, 3.0, 40.0}) {
    auto f = ev::flow_at(1, 0, Z, p);
    EXPECT_DOUBLE_EQ(f.u, 0.0);
    EXPECT_DOUBLE_EQ(f.v, -1.0);
    auto fd = projection_derivative(1, 0, Z, p, 1e-6);
    EXPECT_NEAR(fd.v, -1.0, 1e-8);
  }
}

TEST(FlowAt, MatchesFiniteDifferenceOnRandomSamples) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> c(-0.8, 0.8), z(0.5, 10.0), m(-2.0, 2.0);
  for (int i = 0; i < 300; ++i) {
    const double x = c(rng), y = c(rng), Z = z(rng);
    const ev::Pose6 p{Vec3(m(rng), m(rng), m(rng)), Vec3(m(rng), m(rng), m(rng))};
    auto f = ev::flow_at(x, y, Z, p);
    auto fd = projection_derivative(x, y, Z, p, 1e-6);
    const double err = std::hypot(f.u - fd.u, f.v - fd.v);
    EXPECT_LT(err, 1e-6 * (1.0 + std::hypot(f.u, f.v)));
  }
}

TEST(FlowAt, LinearInPose) {
  const ev::Pose6 a{Vec3(0.3, -0.2, 0.5), Vec3(0.1, 0.4, -0.3)};
  const ev::Pose6 b{Vec3(-1.0, 0.7, 0.2), Vec3(0.9, -0.1, 0.05)};
  auto fa = ev::flow_at(0.2, -0.3, 2.5, a), fb = ev::flow_at(0.2, -0.3, 2.5, b);
  auto fab = ev::flow_at(0.2, -0.3, 2.5, a + b);
  EXPECT_NEAR(fab.u, fa.u + fb.u, 1e-14);
  EXPECT_NEAR(fab.v, fa.v + fb.v, 1e-14);

  auto m = ev::flow_matrix(0.2, -0.3, 2.5);
  Eigen::Vector2d via_matrix = m * a.vector();
  EXPECT_NEAR(via_matrix.x(), fa.u, 1e-14);
  EXPECT_NEAR(via_matrix.y(), fa.v, 1e-14);
}

TEST(FlowAt, ScaleAmbiguity) {
  const ev::Pose6 p{Vec3(0.4, 0.1, -0.6), Vec3(0.2, -0.1, 0.3)};
  const double s = 3.7;
  auto f = ev::flow_at(0.1, 0.25, 1.5, p);
  auto g = ev::flow_at(0.1, 0.25, 1.5 * s, {p.v * s, p.omega});
  EXPECT_NEAR(f.u, g.u, 1e-13);
  EXPECT_NEAR(f.v, g.v, 1e-13);
}

TEST(FlowAt, RejectsNonPositiveDepth) {
  EXPECT_THROW(ev::flow_at(0, 0, 0.0, {}), ev::InvalidArgument);
  EXPECT_THROW(ev::flow_matrix(0, 0, -1.0), ev::InvalidArgument);
}

TEST(PixelPose, PureBackground) {
  const ev::SensorGeometry g{2, 1};
  const ev::Pose6 ego{Vec3(1, 2, 3), Vec3(0.1, 0.2, 0.3)};
  ev::MixturePoseField f(ego, {Vec3(5, 0, 0)}, g, {1, 0, 1, 0});
  EXPECT_EQ(ev::pixel_pose(f, 0), ego);
}

TEST(PixelPose, FullObjectWeight) {
  const ev::SensorGeometry g{1, 1};
  const ev::Pose6 ego{Vec3::Zero(), Vec3(0.1, 0.2, 0.3)};
  ev::MixturePoseField f(ego, {Vec3(2, 0, 0)}, g, {0, 1});
  auto p = ev::pixel_pose(f, 0);
  EXPECT_EQ(p.v, Vec3(2, 0, 0));
  EXPECT_EQ(p.omega, ego.omega);
}

TEST(PixelPose, SoftAssignment) {
  const ev::SensorGeometry g{1, 1};
  ev::MixturePoseField f({}, {Vec3(2, 0, 0)}, g, {0.5, 0.5});
  EXPECT_EQ(ev::pixel_pose(f, 0).v, Vec3(1, 0, 0));
}

TEST(MixturePoseField, RejectsBadWeights) {
  const ev::SensorGeometry g{1, 1};
  EXPECT_THROW(ev::MixturePoseField({}, {Vec3::Zero()}, g, {0.5, 0.6}), ev::InvalidArgument);
  EXPECT_THROW(ev::MixturePoseField({}, {Vec3::Zero()}, g, {1.5, -0.5}), ev::InvalidArgument);
  EXPECT_THROW(ev::MixturePoseField({}, {Vec3::Zero()}, g, {1.0}), ev::InvalidArgument);
}

TEST(FlowField, ZeroPoseZeroFlow) {
  ev::CameraIntrinsics K;
  auto d = ev::DepthMap::constant(K.geometry(), 2.0);
  auto f = ev::flow_field(d, ev::Pose6{}, K);
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    ASSERT_EQ(f.u[i], 0.0);
    ASSERT_EQ(f.v[i], 0.0);
    ASSERT_TRUE(f.valid[i]);
  }
}

TEST(FlowField, InvalidDepthGivesInvalidFlow) {
  ev::CameraIntrinsics K;
  auto d = ev::DepthMap::constant(K.geometry(), 2.0);
  d.invalidate(10, 20);
  auto f = ev::flow_field(d, ev::Pose6{Vec3(1, 0, 0), Vec3::Zero()}, K);
  EXPECT_FALSE(f.valid(10, 20));
  EXPECT_TRUE(f.valid(11, 20));
}

TEST(FlowField, RollIsClockwiseRotationPattern) {
  ev::CameraIntrinsics K;
  K.fy = K.fx;
  auto d = ev::DepthMap::constant(K.geometry(), 2.0);
  const double wz = 0.7;
  auto f = ev::flow_field(d, ev::Pose6{Vec3::Zero(), Vec3(0, 0, wz)}, K);
  // Flow is perpendicular to the radius from the principal point.
  for (int y = 0; y < K.height; y += 17) {
    for (int x = 0; x < K.width; x += 19) {
      const double rx = x - K.cx, ry = y - K.cy;
      EXPECT_NEAR(f.u(x, y) * rx + f.v(x, y) * ry, 0.0, 1e-9);
      EXPECT_NEAR(f.u(x, y), wz * ry, 1e-9);
      EXPECT_NEAR(f.v(x, y), -wz * rx, 1e-9);
    }
  }
  // Discrete curl dv/dx - du/dy = -2 wz.
  const int x = 100, y = 100;
  const double curl =
      (f.v(x + 1, y) - f.v(x - 1, y)) / 2.0 - (f.u(x, y + 1) - f.u(x, y - 1)) / 2.0;
  EXPECT_NEAR(curl, -2.0 * wz, 1e-9);
}

TEST(FlowField, PixelUnitsAndGeometryCheck) {
  ev::CameraIntrinsics K;
  auto d = ev::DepthMap::constant(K.geometry(), 2.0);
  const ev::Pose6 p{Vec3(0.2, -0.1, 0.3), Vec3(0.05, 0.1, -0.2)};
  auto f = ev::flow_field(d, p, K);
  auto n = ev::normalize_coords(40, 200, K);
  auto ref = ev::flow_at(n.x, n.y, 2.0, p);
  EXPECT_NEAR(f.u(40, 200), K.fx * ref.u, 1e-9);
  EXPECT_NEAR(f.v(40, 200), K.fy * ref.v, 1e-9);

  auto small = ev::DepthMap::constant({10, 10}, 1.0);
  EXPECT_THROW(ev::flow_field(small, p, K), ev::GeometryMismatch);
}

TEST(DepthMap, ValidityAndMean) {
  ev::Image<double> v(3, 1);
  v[0] = 2.0;
  v[1] = -1.0;
  v[2] = 4.0;
  auto d = ev::DepthMap::from_values(v);
  EXPECT_EQ(d.valid_count(), 2u);
  EXPECT_DOUBLE_EQ(d.mean_valid(), 3.0);
  auto n = d.normalized_by_mean();
  EXPECT_DOUBLE_EQ(n(2, 0), 4.0 / 3.0);
  EXPECT_THROW(ev::DepthMap(ev::SensorGeometry{2, 2}).mean_valid(), ev::InsufficientData);
}
