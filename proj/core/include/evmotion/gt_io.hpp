#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evmotion/groundtruth.hpp"

namespace evmotion {

/// ASCII PLY with `x y z` vertex properties (extra properties are skipped).
PointCloud load_ply(const std::filesystem::path& path, int object_id);
void save_ply(const std::filesystem::path& path, const PointCloud& cloud);

/// One sample per line: `t tx ty tz qx qy qz qw`, comma or blank separated.
Trajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);

/// Scene manifest (JSON): intrinsics, extrinsic, camera trajectory and a list
/// of objects with cloud and trajectory files relative to the manifest.
Scene load_scene(const std::filesystem::path& manifest);
/// Writes clouds, trajectories and the manifest into `dir`.
void save_scene(const std::filesystem::path& dir, const Scene& scene);

struct FrameRecord {
  double t = 0.0;
  std::string depth;  // file names relative to the manifest directory
  std::string mask;
  Pose6 cam_velocity;
  std::map<int, Vec3> object_velocities;
};

struct FrameManifest {
  double fps = 0.0;
  std::vector<FrameRecord> frames;
};

inline constexpr int kSchemaVersion = 1;

/// depth_NNNN.pfm, mask_NNNN.pgm and manifest.json in `dir`.
void write_frames(const std::filesystem::path& dir, const std::vector<GtFrame>& frames, double fps);
FrameManifest load_frame_manifest(const std::filesystem::path& dir);
GtFrame load_frame(const std::filesystem::path& dir, const FrameRecord& record);

}  // namespace evmotion
