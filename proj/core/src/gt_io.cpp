#include "evmotion/gt_io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evmotion/errors.hpp"
#include "evmotion/image_io.hpp"

namespace evmotion {
namespace {

using nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector", 0);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json transform_json(const RigidTransform& T) {
  const auto& q = T.rotation;
  return {{"translation", vec_json(T.translation)},
          {"rotation", json::array({q.x(), q.y(), q.z(), q.w()})}};
}

RigidTransform json_transform(const json& j) {
  RigidTransform T;
  T.translation = json_vec(j.at("translation"));
  const json& q = j.at("rotation");
  if (!q.is_array() || q.size() != 4) throw ParseError("rotation must be [qx, qy, qz, qw]", 0);
  T.rotation = Eigen::Quaterniond(q[3].get<double>(), q[0].get<double>(), q[1].get<double>(),
                                  q[2].get<double>());
  if (std::abs(T.rotation.norm() - 1.0) > 1e-6) throw ParseError("rotation is not unit", 0);
  T.rotation.normalize();
  return T;
}

json pose_json(const Pose6& p) { return {{"v", vec_json(p.v)}, {"omega", vec_json(p.omega)}}; }

Pose6 json_pose(const json& j) { return {json_vec(j.at("v")), json_vec(j.at("omega"))}; }

std::string numbered(const char* stem, std::size_t k, const char* ext) {
  std::array<char, 64> buf;
  std::snprintf(buf.data(), buf.size(), "%s_%04zu.%s", stem, k, ext);
  return buf.data();
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

PointCloud load_ply(const std::filesystem::path& path, int object_id) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open point cloud " + path.string());
  std::string line;
  std::size_t line_no = 0;
  const auto next = [&] {
    if (!std::getline(in, line)) throw ParseError("unexpected end of PLY header", line_no);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };

  next();
  if (line != "ply") throw ParseError("missing `ply` magic", line_no);
  std::size_t vertices = 0;
  bool in_vertex = false;
  std::vector<std::string> props;
  for (;;) {
    next();
    std::istringstream tok(line);
    std::string kw;
    tok >> kw;
    if (kw == "format") {
      std::string fmt;
      tok >> fmt;
      if (fmt != "ascii") throw ParseError("only ASCII PLY is supported", line_no);
    } else if (kw == "element") {
      std::string name;
      tok >> name;
      in_vertex = name == "vertex";
      if (in_vertex && !(tok >> vertices)) throw ParseError("bad vertex count", line_no);
    } else if (kw == "property" && in_vertex) {
      std::string type, name;
      tok >> type >> name;
      if (type == "list") throw ParseError("list properties on vertices unsupported", line_no);
      props.push_back(name);
    } else if (kw == "end_header") {
      break;
    }
  }
  const auto find = [&](const char* name) {
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props[i] == name) return i;
    }
    throw ParseError(std::string("PLY vertex lacks property ") + name, 0);
  };
  const std::size_t ix = find("x"), iy = find("y"), iz = find("z");

  PointCloud cloud;
  cloud.object_id = object_id;
  cloud.points.reserve(vertices);
  std::vector<double> values(props.size());
  for (std::size_t v = 0; v < vertices; ++v) {
    next();
    std::istringstream tok(line);
    for (double& d : values) {
      if (!(tok >> d)) throw ParseError("short vertex record", line_no);
    }
    const Vec3 p(values[ix], values[iy], values[iz]);
    if (!p.allFinite()) throw ParseError("non-finite vertex", line_no);
    cloud.points.push_back(p);
  }
  if (cloud.points.empty()) throw ParseError("point cloud " + path.string() + " is empty", 0);
  return cloud;
}

void save_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  out.precision(9);
  for (const Vec3& p : cloud.points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory " + path.string());
  std::vector<PoseSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream tok(line);
    std::array<double, 8> f;
    std::string first;
    if (!(tok >> first)) continue;
    if (first == "t") continue;  // column header
    try {
      f[0] = std::stod(first);
    } catch (const std::exception&) {
      throw ParseError("bad timestamp '" + first + "'", line_no);
    }
    for (std::size_t i = 1; i < f.size(); ++i) {
      if (!(tok >> f[i])) throw ParseError("expected `t tx ty tz qx qy qz qw`", line_no);
    }
    PoseSample s;
    s.t = f[0];
    s.pose.translation = Vec3(f[1], f[2], f[3]);
    s.pose.rotation = Eigen::Quaterniond(f[7], f[4], f[5], f[6]);
    samples.push_back(s);
  }
  try {
    return Trajectory(std::move(samples));
  } catch (const InvalidArgument& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "t,tx,ty,tz,qx,qy,qz,qw\n";
  out.precision(17);
  for (const PoseSample& s : trajectory.samples()) {
    const auto& q = s.pose.rotation;
    const auto& p = s.pose.translation;
    out << s.t << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << q.x() << ',' << q.y()
        << ',' << q.z() << ',' << q.w() << '\n';
  }
}

Scene load_scene(const std::filesystem::path& manifest) {
  const json j = read_json(manifest);
  const std::filesystem::path base = manifest.parent_path();
  try {
    Scene scene;
    if (j.contains("intrinsics_file")) {
      scene.K = load_intrinsics(base / j.at("intrinsics_file").get<std::string>());
    } else {
      const json& k = j.at("intrinsics");
      scene.K = {k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                 k.at("cy").get<double>(), k.at("width").get<int>(), k.at("height").get<int>()};
    }
    if (j.contains("extrinsic")) scene.extrinsic = json_transform(j.at("extrinsic"));
    scene.splat_size = j.value("splat_size", 1);
    scene.camera = load_trajectory(base / j.at("camera_trajectory").get<std::string>());
    for (const json& o : j.at("objects")) {
      const int id = o.at("id").get<int>();
      scene.objects.push_back({load_ply(base / o.at("cloud").get<std::string>(), id),
                               load_trajectory(base / o.at("trajectory").get<std::string>())});
    }
    scene.validate();
    return scene;
  } catch (const json::exception& e) {
    throw ParseError(manifest.string() + ": " + e.what(), 0);
  }
}

void save_scene(const std::filesystem::path& dir, const Scene& scene) {
  std::filesystem::create_directories(dir);
  save_trajectory(dir / "camera.csv", scene.camera);
  json objects = json::array();
  for (const SceneObject& o : scene.objects) {
    const std::string stem = "object_" + std::to_string(o.cloud.object_id);
    save_ply(dir / (stem + ".ply"), o.cloud);
    save_trajectory(dir / (stem + ".csv"), o.trajectory);
    objects.push_back({{"id", o.cloud.object_id},
                       {"cloud", stem + ".ply"},
                       {"trajectory", stem + ".csv"}});
  }
  const CameraIntrinsics& K = scene.K;
  const json j = {
      {"schema", kSchemaVersion},
      {"intrinsics",
       {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"width", K.width},
        {"height", K.height}}},
      {"extrinsic", transform_json(scene.extrinsic)},
      {"camera_trajectory", "camera.csv"},
      {"splat_size", scene.splat_size},
      {"objects", objects}};
  write_json(dir / "scene.json", j);
}

void write_frames(const std::filesystem::path& dir, const std::vector<GtFrame>& frames,
                  double fps) {
  std::filesystem::create_directories(dir);
  json list = json::array();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const GtFrame& f = frames[k];
    const std::string depth = numbered("depth", k, "pfm");
    const std::string mask = numbered("mask", k, "pgm");
    write_depth_pfm(dir / depth, f.depth);
    write_pgm(dir / mask, f.mask);
    json objects = json::object();
    for (const auto& [id, v] : f.object_velocities) objects[std::to_string(id)] = vec_json(v);
    list.push_back({{"t", f.t},
                    {"depth", depth},
                    {"mask", mask},
                    {"cam_velocity", pose_json(f.cam_velocity)},
                    {"object_velocities", objects}});
  }
  write_json(dir / "manifest.json", {{"schema", kSchemaVersion}, {"fps", fps}, {"frames", list}});
}

FrameManifest load_frame_manifest(const std::filesystem::path& dir) {
  const std::filesystem::path path =
      std::filesystem::is_directory(dir) ? dir / "manifest.json" : dir;
  const json j = read_json(path);
  try {
    if (j.at("schema").get<int>() != kSchemaVersion) {
      throw ParseError(path.string() + ": unsupported schema", 0);
    }
    FrameManifest m;
    m.fps = j.value("fps", 0.0);
    for (const json& f : j.at("frames")) {
      FrameRecord r;
      r.t = f.at("t").get<double>();
      r.depth = f.value("depth", "");
      r.mask = f.value("mask", "");
      if (f.contains("cam_velocity")) r.cam_velocity = json_pose(f.at("cam_velocity"));
      if (f.contains("object_velocities")) {
        for (const auto& [id, v] : f.at("object_velocities").items()) {
          r.object_velocities[std::stoi(id)] = json_vec(v);
        }
      }
      m.frames.push_back(std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

GtFrame load_frame(const std::filesystem::path& dir, const FrameRecord& record) {
  const std::filesystem::path base =
      std::filesystem::is_directory(dir) ? dir : dir.parent_path();
  GtFrame f;
  f.t = record.t;
  if (!record.depth.empty()) f.depth = read_depth_pfm(base / record.depth);
  if (!record.mask.empty()) f.mask = read_pgm(base / record.mask);
  f.cam_velocity = record.cam_velocity;
  f.object_velocities = record.object_velocities;
  return f;
}

}  // namespace evmotion
