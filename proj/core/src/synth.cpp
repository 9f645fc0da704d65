#include "evmotion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "evmotion/errors.hpp"

namespace evmotion {
namespace {

constexpr double kTick = 1e-6;

Eigen::Matrix3d skew(const Vec3& w) {
  Eigen::Matrix3d k;
  k << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return k;
}

// Closed-form solution of dX/dt = -v - omega x X after time tau.
Vec3 move_point(const Vec3& X0, const Pose6& pose, double tau) {
  const double rate = pose.omega.norm();
  const double a = rate * tau;
  if (std::abs(a) < 1e-9) {
    return X0 - tau * (pose.v + pose.omega.cross(X0));
  }
  const Eigen::Matrix3d k = skew(pose.omega / rate);
  const Eigen::Matrix3d k2 = k * k;
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d R = I - std::sin(a) * k + (1.0 - std::cos(a)) * k2;
  const Eigen::Matrix3d integral =
      tau * I - (1.0 - std::cos(a)) / rate * k + (tau - std::sin(a) / rate) * k2;
  return R * X0 - integral * pose.v;
}

Vec3 back_project(double px, double py, double Z, const CameraIntrinsics& K) {
  const NormalizedPoint n = normalize_coords(px, py, K);
  return {n.x * Z, n.y * Z, Z};
}

bool project(const Vec3& X, const CameraIntrinsics& K, double& px, double& py) {
  if (!(X.z() > 1e-6)) return false;
  px = K.fx * X.x() / X.z() + K.cx;
  py = K.fy * X.y() / X.z() + K.cy;
  return std::isfinite(px) && std::isfinite(py);
}

int nearest(double c) { return static_cast<int>(std::floor(c + 0.5)); }

double plane_depth(const SynthConfig& c, double px, double py) {
  const NormalizedPoint n = normalize_coords(px, py, c.K);
  const double denom = 1.0 + c.slope_x * n.x + c.slope_y * n.y;
  if (!(denom > 0.1)) throw InvalidArgument("plane slope puts the plane behind the camera");
  return c.center_depth / denom;
}

struct Window {
  double t0 = 0.0;
  long long slice_ticks = 0;
  int slices = 0;
  double edge(int k) const {
    return t0 + static_cast<double>(static_cast<long long>(k) * slice_ticks) * kTick;
  }
  long long ticks() const { return slice_ticks * slices; }
  double time(long long tick) const { return t0 + static_cast<double>(tick) * kTick; }
  double t_ref() const {
    const int m = slices / 2;
    return 0.5 * (edge(m) + edge(m + 1));
  }
};

Window make_window(double t0, int slices, double slice_dt) {
  if (slices < 1 || slices % 2 == 0) throw InvalidArgument("slice count must be odd");
  const long long ticks = std::llround(slice_dt / kTick);
  if (ticks < 1) throw InvalidArgument("slice duration below the 1 us timestamp grid");
  return {t0, ticks, slices};
}

struct TimedEvent {
  long long tick;
  Event e;
};

std::vector<EventSlice> build_slices(const std::vector<TimedEvent>& sorted, const Window& w,
                                     SensorGeometry g) {
  std::vector<std::vector<Event>> buckets(static_cast<std::size_t>(w.slices));
  for (const TimedEvent& te : sorted) {
    buckets[static_cast<std::size_t>(te.tick / w.slice_ticks)].push_back(te.e);
  }
  std::vector<EventSlice> out;
  for (int k = 0; k < w.slices; ++k) {
    out.emplace_back(std::move(buckets[static_cast<std::size_t>(k)]), w.edge(k), w.edge(k + 1), g);
  }
  return out;
}

void sort_by_time(std::vector<TimedEvent>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const TimedEvent& a, const TimedEvent& b) { return a.tick < b.tick; });
}

Vec3 unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    const Vec3 v(n(rng), n(rng), n(rng));
    if (v.norm() > 1e-6) return v.normalized();
  }
}

void add_box_faces(std::vector<Vec3>& pts, const Vec3& lo, const Vec3& hi, double spacing,
                   bool skip_low_z = false) {
  const auto steps = [&](double a, double b) {
    return std::max(1, static_cast<int>(std::ceil((b - a) / spacing)));
  };
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    const int nu = steps(lo[u], hi[u]);
    const int nv = steps(lo[v], hi[v]);
    for (int side = 0; side < 2; ++side) {
      if (skip_low_z && axis == 2 && side == 0) continue;
      for (int i = 0; i <= nu; ++i) {
        for (int j = 0; j <= nv; ++j) {
          Vec3 p;
          p[axis] = side ? hi[axis] : lo[axis];
          p[u] = lo[u] + (hi[u] - lo[u]) * i / nu;
          p[v] = lo[v] + (hi[v] - lo[v]) * j / nv;
          pts.push_back(p);
        }
      }
    }
  }
}

Trajectory still(const Vec3& position, double duration) {
  RigidTransform T;
  T.translation = position;
  return Trajectory({{0.0, T}, {duration, T}});
}

}  // namespace

SynthScene make_synthetic_scene(const SynthConfig& c) {
  c.K.validate();
  if (c.texture_points < 0 || c.events_per_point < 1 || c.noise_events < 0) {
    throw InvalidArgument("texture and event counts must be non-negative");
  }
  if (!(c.center_depth > 0.0)) throw InvalidArgument("plane depth must be positive");
  if (!c.ego.finite()) throw InvalidArgument("ego motion must be finite");
  const SensorGeometry g = c.K.geometry();
  const Window w = make_window(0.0, c.slices, c.slice_dt);

  SynthScene scene;
  scene.K = c.K;
  scene.ego = c.ego;
  scene.t_ref = w.t_ref();
  scene.object_mask = Mask(g, 0);
  scene.depth = DepthMap(g);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) scene.depth.set(x, y, plane_depth(c, x, y));
  }

  Pose6 object_pose = c.ego;
  const SynthObject* obj = c.object ? &*c.object : nullptr;
  Vec3 obj_center = Vec3::Zero();
  if (obj) {
    if (obj->x0 > obj->x1 || obj->y0 > obj->y1 || !g.contains(obj->x0, obj->y0) ||
        !g.contains(obj->x1, obj->y1) || !(obj->depth > 0.0)) {
      throw InvalidArgument("object box must lie on the sensor with positive depth");
    }
    object_pose.v += obj->translation;
    scene.object_translation = obj->translation;
    scene.object_velocity = -(c.ego.v + obj->translation);
    for (int y = obj->y0; y <= obj->y1; ++y) {
      for (int x = obj->x0; x <= obj->x1; ++x) {
        scene.depth.set(x, y, obj->depth);
        scene.object_mask(x, y) = 1;
      }
    }
    obj_center = back_project(0.5 * (obj->x0 + obj->x1), 0.5 * (obj->y0 + obj->y1), obj->depth,
                              c.K);
  }

  std::mt19937_64 rng(c.seed);
  std::uniform_int_distribution<long long> tick_dist(0, w.ticks() - 1);
  std::bernoulli_distribution coin(0.5);
  std::vector<TimedEvent> events;

  // Object footprint at time t: the reference box shifted with its centre.
  const auto occluded = [&](int x, int y, double tau) {
    if (!obj) return false;
    double cx = 0.0, cy = 0.0;
    if (!project(move_point(obj_center, object_pose, tau), c.K, cx, cy)) return false;
    const double dx = cx - 0.5 * (obj->x0 + obj->x1);
    const double dy = cy - 0.5 * (obj->y0 + obj->y1);
    return x >= obj->x0 + dx - 0.5 && x <= obj->x1 + dx + 0.5 && y >= obj->y0 + dy - 0.5 &&
           y <= obj->y1 + dy + 0.5;
  };

  const auto emit_point = [&](const Vec3& X0, const Pose6& pose, bool background) {
    const int polarity = coin(rng) ? 1 : -1;
    for (int k = 0; k < c.events_per_point; ++k) {
      const long long tick = tick_dist(rng);
      const double tau = w.time(tick) - scene.t_ref;
      double px = 0.0, py = 0.0;
      if (!project(move_point(X0, pose, tau), c.K, px, py)) continue;
      const int x = nearest(px);
      const int y = nearest(py);
      if (!g.contains(x, y)) continue;
      if (background && occluded(x, y, tau)) continue;
      events.push_back({tick, {w.time(tick), x, y, polarity}});
    }
  };

  const double margin = 20.0;
  std::uniform_real_distribution<double> ux(-margin, g.width - 1 + margin);
  std::uniform_real_distribution<double> uy(-margin, g.height - 1 + margin);
  for (int i = 0; i < c.texture_points; ++i) {
    const double px = ux(rng);
    const double py = uy(rng);
    emit_point(back_project(px, py, plane_depth(c, px, py), c.K), c.ego, true);
  }
  if (obj) {
    std::uniform_real_distribution<double> ox(obj->x0 - 0.5, obj->x1 + 0.5);
    std::uniform_real_distribution<double> oy(obj->y0 - 0.5, obj->y1 + 0.5);
    for (int i = 0; i < obj->texture_points; ++i) {
      const double px = ox(rng);
      const double py = oy(rng);
      emit_point(back_project(px, py, obj->depth, c.K), object_pose, false);
    }
  }
  std::uniform_int_distribution<int> nx(0, g.width - 1);
  std::uniform_int_distribution<int> ny(0, g.height - 1);
  for (int i = 0; i < c.noise_events; ++i) {
    const long long tick = tick_dist(rng);
    const int x = nx(rng);
    const int y = ny(rng);
    events.push_back({tick, {w.time(tick), x, y, coin(rng) ? 1 : -1}});
  }

  sort_by_time(events);
  scene.slices = build_slices(events, w, g);
  scene.events.reserve(events.size());
  for (const TimedEvent& te : events) scene.events.push_back(te.e);
  return scene;
}

SynthConfig random_rigid_config(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  SynthConfig c;
  c.texture_points = 3000;
  c.center_depth = range(2.0, 4.0);
  c.slope_x = range(-0.4, 0.4);
  c.slope_y = range(-0.4, 0.4);
  c.ego.omega = unit_vector(rng) * range(0.6, 1.2);
  c.ego.v = unit_vector(rng) * range(0.35, 0.6) * c.center_depth;
  c.seed = seed;
  return c;
}

SynthConfig random_object_config(std::uint64_t seed) {
  SynthConfig c = random_rigid_config(seed);
  std::mt19937_64 rng(seed * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  c.center_depth = range(2.8, 4.0);
  c.ego.v = c.ego.v.normalized() * range(0.35, 0.6) * c.center_depth;
  SynthObject o;
  const int width = static_cast<int>(range(90, 130));
  const int height = static_cast<int>(range(70, 100));
  o.x0 = static_cast<int>(range(40, c.K.width - 40 - width));
  o.y0 = static_cast<int>(range(30, c.K.height - 30 - height));
  o.x1 = o.x0 + width - 1;
  o.y1 = o.y0 + height - 1;
  o.depth = range(1.0, 1.4);
  o.translation = unit_vector(rng) * range(0.8, 1.5);
  c.object = o;
  return c;
}

Scene make_room_scene(const RoomConfig& c) {
  c.K.validate();
  if (!(c.duration > 0.0) || !(c.pose_rate > 0.0)) {
    throw InvalidArgument("duration and pose rate must be positive");
  }
  if (!(c.wall_spacing > 0.0) || !(c.box_spacing > 0.0) || !(c.box_size > 0.0)) {
    throw InvalidArgument("spacings and box size must be positive");
  }
  Scene scene;
  scene.K = c.K;
  scene.splat_size = c.splat_size;

  PointCloud room;
  room.object_id = kBackgroundId;
  add_box_faces(room.points, c.room_min, c.room_max, c.wall_spacing, true);
  scene.objects.push_back({std::move(room), still(Vec3::Zero(), c.duration)});

  const Vec3 half = Vec3::Constant(0.5 * c.box_size);
  PointCloud box;
  add_box_faces(box.points, -half, half, c.box_spacing);

  PointCloud moving = box;
  moving.object_id = 1;
  RigidTransform start, end;
  start.translation = c.moving_box_start;
  end.translation = c.moving_box_start + c.moving_box_velocity * c.duration;
  scene.objects.push_back({std::move(moving), Trajectory({{0.0, start}, {c.duration, end}})});

  PointCloud fixed = box;
  fixed.object_id = 2;
  scene.objects.push_back({std::move(fixed), still(c.static_box_center, c.duration)});

  // Camera pose integrated on a fine grid and sampled at the pose rate.
  const auto samples = static_cast<long long>(std::llround(c.duration * c.pose_rate));
  const int substeps = 16;
  const double h = c.duration / static_cast<double>(samples * substeps);
  std::vector<PoseSample> cam;
  RigidTransform T;
  cam.push_back({0.0, T});
  for (long long k = 0; k < samples; ++k) {
    for (int s = 0; s < substeps; ++s) {
      const double tm = (static_cast<double>(k * substeps + s) + 0.5) * h;
      const Vec3 w = c.omega0 + c.omega1 * std::sin(2.0 * std::numbers::pi * tm / c.duration);
      T.translation += T.rotation * c.camera_velocity * h;
      const double a = w.norm() * h;
      if (a > 0.0) {
        T.rotation = (T.rotation * Eigen::Quaterniond(Eigen::AngleAxisd(a, w.normalized())))
                         .normalized();
      }
    }
    const double t = k + 1 == samples ? c.duration : static_cast<double>(k + 1) / c.pose_rate;
    cam.push_back({t, T});
  }
  scene.camera = Trajectory(std::move(cam));
  scene.validate();
  return scene;
}

Mask edge_pixels(const GtFrame& frame, double depth_jump) {
  const SensorGeometry g = frame.mask.geometry();
  if (!(frame.depth.geometry() == g)) throw GeometryMismatch("depth and mask differ");
  Mask edges(g, 0);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      if (!frame.depth.valid(x, y)) continue;
      const double d = frame.depth(x, y);
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& n : nb) {
        if (!g.contains(n[0], n[1])) continue;
        bool edge = frame.mask(n[0], n[1]) != frame.mask(x, y);
        if (!edge && frame.depth.valid(n[0], n[1])) {
          const double dn = frame.depth(n[0], n[1]);
          edge = std::abs(d - dn) > depth_jump * std::min(d, dn);
        }
        if (edge) {
          edges(x, y) = 1;
          break;
        }
      }
    }
  }
  return edges;
}

EdgeEvents synthesize_edge_events(const Scene& scene, const GtFrame& frame, int slices,
                                  double slice_dt, int events_per_pixel, std::uint64_t seed,
                                  int object_id) {
  if (events_per_pixel < 1) throw InvalidArgument("events per pixel must be positive");
  const CameraIntrinsics& K = scene.K;
  const SensorGeometry g = K.geometry();
  if (!(frame.depth.geometry() == g)) throw GeometryMismatch("frame and intrinsics differ");
  const Window w = make_window(frame.t - 0.5 * slices * slice_dt, slices, slice_dt);
  if (!scene.camera.covers(w.edge(0)) || !scene.camera.covers(w.edge(slices))) {
    throw InvalidArgument("camera trajectory does not cover the event window");
  }

  const Mask edges = edge_pixels(frame);
  const RigidTransform world_from_cam = camera_from_world(scene, frame.t).inverse();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long long> tick_dist(0, w.ticks() - 1);
  std::bernoulli_distribution coin(0.5);

  std::vector<TimedEvent> moving, still_events;
  EdgeEvents out;
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      if (!edges(x, y) || frame.mask(x, y) != object_id) continue;
      ++out.sources;
      const Vec3 Xw = world_from_cam * back_project(x, y, frame.depth(x, y), K);
      const int polarity = coin(rng) ? 1 : -1;
      for (int k = 0; k < events_per_pixel; ++k) {
        const long long tick = tick_dist(rng);
        const double t = w.time(tick);
        double px = 0.0, py = 0.0;
        if (!project(camera_from_world(scene, t) * Xw, K, px, py)) continue;
        const int ex = nearest(px);
        const int ey = nearest(py);
        if (!g.contains(ex, ey) || !frame.depth.valid(ex, ey)) continue;
        moving.push_back({tick, {t, ex, ey, polarity}});
        still_events.push_back({tick, {t, x, y, polarity}});
      }
    }
  }
  // Identical stable order keeps the two streams paired event by event.
  sort_by_time(moving);
  sort_by_time(still_events);
  out.moving = build_slices(moving, w, g);
  out.still = build_slices(still_events, w, g);
  return out;
}

}  // namespace evmotion
