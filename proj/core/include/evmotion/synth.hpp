#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "evmotion/events.hpp"
#include "evmotion/geometry.hpp"
#include "evmotion/groundtruth.hpp"

namespace evmotion {

/// Fronto-parallel textured rectangle moving with its own residual
/// translation on top of the ego motion.
struct SynthObject {
  int x0 = 120, y0 = 90, x1 = 220, y1 = 170;  // pixel box at the reference time, inclusive
  double depth = 1.5;
  Vec3 translation = Vec3::Zero();  // t_j: object pixels move with pose (v + t_j, omega)
  int texture_points = 500;
};

/// Textured plane Z = center_depth / (1 + slope_x * x + slope_y * y) in
/// normalized coordinates, seen by a camera moving with a constant `ego` twist.
struct SynthConfig {
  CameraIntrinsics K;
  int slices = 3;
  double slice_dt = 0.025;
  double center_depth = 3.0;
  double slope_x = 0.3;
  double slope_y = -0.2;
  int texture_points = 1500;
  int events_per_point = 8;
  int noise_events = 0;
  Pose6 ego;
  std::optional<SynthObject> object;
  std::uint64_t seed = 0;
};

struct SynthScene {
  CameraIntrinsics K;
  std::vector<Event> events;       // sorted, timestamps on a 1 us grid starting at 0
  std::vector<EventSlice> slices;  // `slices` windows of slice_dt from t = 0
  DepthMap depth;                  // at t_ref, valid everywhere
  Mask object_mask;                // 1 on object pixels at t_ref
  Pose6 ego;
  Vec3 object_translation = Vec3::Zero();
  Vec3 object_velocity = Vec3::Zero();  // -(ego.v + translation)
  double t_ref = 0.0;                   // centre of the middle slice
};

/// Events of texture points whose camera-frame position follows the rigid
/// motion dX/dt = -v - omega x X exactly (integrated), projected and rounded.
/// Background events hidden behind the object at their timestamp are dropped.
SynthScene make_synthetic_scene(const SynthConfig& config);

/// Random camera motion and plane for rigid-scene experiments.
SynthConfig random_rigid_config(std::uint64_t seed);
/// random_rigid_config plus a randomly placed object with its own translation.
SynthConfig random_object_config(std::uint64_t seed);

struct RoomConfig {
  CameraIntrinsics K;
  double duration = 1.0;
  double pose_rate = 200.0;
  Vec3 room_min{-3.0, -2.0, -2.0};
  Vec3 room_max{3.0, 2.0, 5.0};
  double wall_spacing = 0.02;
  double box_spacing = 0.006;
  /// Camera sits at the origin looking along +z and turns with angular
  /// velocity omega0 + omega1 * sin(2 pi t / duration) about its own centre.
  Vec3 omega0{0.05, 0.12, 0.03};
  Vec3 omega1{0.012, -0.01, 0.008};
  Vec3 camera_velocity{0.02, 0.0, 0.01};  // camera frame, m/s
  /// Moving box (id 1) and a static box (id 2).
  Vec3 moving_box_start{-0.6, 0.2, 2.0};
  Vec3 moving_box_velocity{0.3, 0.0, 0.0};
  Vec3 static_box_center{0.8, -0.4, 2.8};
  double box_size = 0.5;
  int splat_size = 3;
};

/// Box-shaped room (id 0) with one moving and one static box.
Scene make_room_scene(const RoomConfig& config);

/// Pixels whose 4-neighbourhood crosses a mask id change or a relative depth
/// jump above `depth_jump`. Only pixels with valid depth qualify.
Mask edge_pixels(const GtFrame& frame, double depth_jump = 0.05);

struct EdgeEvents {
  std::vector<EventSlice> moving;  // events along the true camera motion
  std::vector<EventSlice> still;   // same timestamps at the reference pixels
  std::size_t sources = 0;         // edge pixels used
};

/// For each edge pixel of `frame` with id `object_id`, back-projects it with
/// the frame depth, moves it with the scene's camera trajectory over
/// `slices` windows of `slice_dt` centred on frame.t, and emits
/// `events_per_pixel` events at the rounded projections. Static objects only:
/// the point is held fixed in the world.
EdgeEvents synthesize_edge_events(const Scene& scene, const GtFrame& frame, int slices,
                                  double slice_dt, int events_per_pixel, std::uint64_t seed,
                                  int object_id = kBackgroundId);

}  // namespace evmotion
