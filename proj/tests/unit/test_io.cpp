#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include <gtest/gtest.h>

#include "evmotion/errors.hpp"
#include "evmotion/events.hpp"
#include "evmotion/gt_io.hpp"
#include "evmotion/image_io.hpp"

namespace ev = evmotion;
namespace fs = std::filesystem;
using ev::Vec3;
using Eigen::AngleAxisd;
using Eigen::Quaterniond;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("evmotion_io_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

  fs::path dir_;
};

ev::Trajectory wobble(double t1, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ev::PoseSample> s;
  for (int k = 0; k < n; ++k) {
    s.push_back({t1 * k / (n - 1),
                 {Quaterniond(AngleAxisd(u(rng), Vec3(u(rng), u(rng), 1.0).normalized())),
                  Vec3(u(rng), u(rng), u(rng))}});
  }
  return ev::Trajectory(s);
}

}  // namespace

using ImageIo = TempDir;
using EventIo = TempDir;
using GtIo = TempDir;

TEST_F(ImageIo, PfmRoundTripBitExact) {
  ev::Image<float> img(7, 5);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = 0.37f * static_cast<float>(i) - 3.0f;
  ev::write_pfm(dir_ / "a.pfm", img);
  EXPECT_EQ(ev::read_pfm(dir_ / "a.pfm"), img);
}

TEST_F(ImageIo, PfmRowsBottomToTop) {
  ev::Image<float> img(1, 2);
  img(0, 0) = 1.0f;  // top row
  img(0, 1) = 2.0f;
  ev::write_pfm(dir_ / "r.pfm", img);
  std::ifstream in(dir_ / "r.pfm", std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  ASSERT_EQ(text.substr(0, 3), "Pf\n");
  float first;
  std::memcpy(&first, text.data() + text.size() - 8, 4);
  EXPECT_EQ(first, 2.0f);
}

TEST_F(ImageIo, DepthZeroMeansInvalid) {
  auto d = ev::DepthMap::constant({4, 3}, 1.25);
  d.invalidate(1, 1);
  ev::write_depth_pfm(dir_ / "d.pfm", d);
  auto back = ev::read_depth_pfm(dir_ / "d.pfm");
  EXPECT_FALSE(back.valid(1, 1));
  EXPECT_EQ(back.valid_count(), 11u);
  EXPECT_EQ(back(2, 2), 1.25);
  EXPECT_EQ(ev::read_pfm(dir_ / "d.pfm")(1, 1), 0.0f);
}

TEST_F(ImageIo, PgmRoundTrip) {
  ev::Mask m(9, 4);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<unsigned char>(i * 7);
  ev::write_pgm(dir_ / "m.pgm", m);
  EXPECT_EQ(ev::read_pgm(dir_ / "m.pgm"), m);
}

TEST_F(ImageIo, MalformedFiles) {
  write_text(dir_ / "bad.pfm", "PF\n2 2\n-1\n");
  EXPECT_THROW(ev::read_pfm(dir_ / "bad.pfm"), ev::ParseError);
  write_text(dir_ / "short.pfm", "Pf\n2 2\n-1\nabc");
  EXPECT_THROW(ev::read_pfm(dir_ / "short.pfm"), ev::ParseError);
  EXPECT_THROW(ev::read_pgm(dir_ / "missing.pgm"), ev::IoError);
}

TEST(ToGray, RoundsAndClamps) {
  ev::Image<double> v(3, 1);
  v[0] = 0.4;
  v[1] = 1.6;
  v[2] = 1e6;
  auto g = ev::to_gray(v, 1.0);
  EXPECT_EQ(g[0], 0);
  EXPECT_EQ(g[1], 2);
  EXPECT_EQ(g[2], 255);
}

TEST_F(EventIo, SaveLoadRoundTrip) {
  std::vector<ev::Event> e{{0.0, 0, 0, 1}, {1e-6, 345, 259, -1}, {0.1234567891, 17, 3, 1}};
  ev::save_events(dir_ / "e.txt", e);
  EXPECT_EQ(ev::load_events(dir_ / "e.txt", {346, 260}), e);
  EXPECT_THROW(ev::load_events(dir_ / "none.txt", {346, 260}), ev::IoError);
}

TEST_F(EventIo, IntrinsicsRoundTrip) {
  ev::CameraIntrinsics K{211.25, 209.5, 170.125, 131.0, 346, 260};
  ev::save_intrinsics(dir_ / "k.txt", K);
  auto back = ev::load_intrinsics(dir_ / "k.txt");
  EXPECT_EQ(back.fx, K.fx);
  EXPECT_EQ(back.cy, K.cy);
  EXPECT_EQ(back.width, K.width);
}

TEST_F(GtIo, PlyRoundTripAndExtraProperties) {
  ev::PointCloud c;
  c.points = {Vec3(0.5, -1.25, 2.0), Vec3(1, 2, 3)};
  ev::save_ply(dir_ / "c.ply", c);
  auto back = ev::load_ply(dir_ / "c.ply", 4);
  EXPECT_EQ(back.object_id, 4);
  ASSERT_EQ(back.points.size(), 2u);
  EXPECT_TRUE(back.points[0].isApprox(c.points[0]));

  write_text(dir_ / "x.ply",
             "ply\nformat ascii 1.0\ncomment scan\nelement vertex 1\nproperty float nx\n"
             "property float z\nproperty float y\nproperty float x\nproperty uchar red\n"
             "end_header\n9 3 2 1 255\n");
  auto x = ev::load_ply(dir_ / "x.ply", 0);
  EXPECT_TRUE(x.points[0].isApprox(Vec3(1, 2, 3)));

  write_text(dir_ / "bin.ply", "ply\nformat binary_little_endian 1.0\nend_header\n");
  EXPECT_THROW(ev::load_ply(dir_ / "bin.ply", 0), ev::ParseError);
}

TEST_F(GtIo, TrajectoryRoundTrip) {
  auto tr = wobble(1.0, 7, 5);
  ev::save_trajectory(dir_ / "t.csv", tr);
  auto back = ev::load_trajectory(dir_ / "t.csv");
  ASSERT_EQ(back.samples().size(), tr.samples().size());
  for (std::size_t k = 0; k < tr.samples().size(); ++k) {
    EXPECT_EQ(back.samples()[k].t, tr.samples()[k].t);
    EXPECT_EQ(back.samples()[k].pose.translation, tr.samples()[k].pose.translation);
    EXPECT_NEAR(back.samples()[k].pose.rotation.angularDistance(tr.samples()[k].pose.rotation),
                0.0, 1e-12);
  }
}

TEST_F(GtIo, TrajectoryBlankSeparatedWithComments) {
  write_text(dir_ / "t.txt", "# tracked at 200 Hz\n0 0 0 0 0 0 0 1\n0.005 1 0 0 0 0 0 1\n");
  auto tr = ev::load_trajectory(dir_ / "t.txt");
  EXPECT_EQ(tr.samples().size(), 2u);
  write_text(dir_ / "bad.txt", "0 0 0 0 0 0 1\n");
  EXPECT_THROW(ev::load_trajectory(dir_ / "bad.txt"), ev::ParseError);
  write_text(dir_ / "dup.txt", "0 0 0 0 0 0 0 1\n0 0 0 0 0 0 0 1\n");
  EXPECT_THROW(ev::load_trajectory(dir_ / "dup.txt"), ev::ParseError);
}

TEST_F(GtIo, SceneRoundTripRendersIdentically) {
  ev::Scene s;
  s.K = {180.0, 182.0, 170.0, 128.0, 346, 260};
  s.camera = wobble(1.0, 11, 1);
  s.extrinsic = {Quaterniond(AngleAxisd(0.02, Vec3::UnitX())), Vec3(0.01, 0, 0)};
  s.splat_size = 2;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int id : {0, 3}) {
    ev::SceneObject o;
    o.cloud.object_id = id;
    for (int i = 0; i < 300; ++i) o.cloud.points.push_back(Vec3(u(rng), u(rng), 3.0 + u(rng)));
    o.trajectory = ev::Trajectory({{0.0, {}}, {1.0, {}}});
    s.objects.push_back(o);
  }
  ev::save_scene(dir_ / "scene", s);
  auto back = ev::load_scene(dir_ / "scene" / "scene.json");
  EXPECT_EQ(back.splat_size, 2);
  EXPECT_EQ(back.K.fy, 182.0);
  ASSERT_EQ(back.objects.size(), 2u);
  auto a = ev::project_cloud(s, 0.4), b = ev::project_cloud(back, 0.4);
  EXPECT_EQ(a.mask, b.mask);
  for (std::size_t i = 0; i < a.depth.values().size(); ++i) {
    ASSERT_NEAR(a.depth[i], b.depth[i], 1e-6);
  }
}

TEST_F(GtIo, MalformedSceneManifest) {
  write_text(dir_ / "s.json", "{ not json");
  EXPECT_THROW(ev::load_scene(dir_ / "s.json"), ev::ParseError);
  write_text(dir_ / "m.json", R"({"intrinsics": {"fx": 1}})");
  EXPECT_THROW(ev::load_scene(dir_ / "m.json"), ev::ParseError);
  EXPECT_THROW(ev::load_scene(dir_ / "absent.json"), ev::IoError);
}

TEST_F(GtIo, FramesRoundTrip) {
  ev::GtFrame f;
  f.t = 0.025;
  f.depth = ev::DepthMap::constant({6, 4}, 2.5);
  f.depth.invalidate(0, 0);
  f.mask = ev::Mask({6, 4}, 0);
  f.mask(0, 0) = ev::kEmptyId;
  f.mask(3, 2) = 1;
  f.cam_velocity = {Vec3(0.1, 0.2, 0.3), Vec3(-0.01, 0.02, 0.5)};
  f.object_velocities[1] = Vec3(1, 2, 3);
  ev::write_frames(dir_, {f, f}, 40.0);
  EXPECT_TRUE(fs::exists(dir_ / "depth_0001.pfm"));
  EXPECT_TRUE(fs::exists(dir_ / "mask_0001.pgm"));
  auto manifest = ev::load_frame_manifest(dir_);
  EXPECT_EQ(manifest.fps, 40.0);
  ASSERT_EQ(manifest.frames.size(), 2u);
  auto back = ev::load_frame(dir_, manifest.frames[1]);
  EXPECT_EQ(back.t, f.t);
  EXPECT_EQ(back.mask, f.mask);
  EXPECT_EQ(back.depth.validity(), f.depth.validity());
  EXPECT_EQ(back.cam_velocity, f.cam_velocity);
  EXPECT_EQ(back.object_velocities.at(1), Vec3(1, 2, 3));
}
