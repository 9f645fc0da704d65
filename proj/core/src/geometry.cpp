#include "evmotion/geometry.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "evmotion/errors.hpp"

namespace evmotion {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw InvalidArgument("focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) throw InvalidArgument("sensor size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw InvalidArgument("principal point must lie on the sensor");
  }
}

CameraIntrinsics parse_intrinsics(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    CameraIntrinsics K;
    if (!(fields >> K.fx)) continue;  // blank or comment-only line
    if (!(fields >> K.fy >> K.cx >> K.cy >> K.width >> K.height)) {
      throw ParseError("expected `fx fy cx cy width height`", line_no);
    }
    std::string extra;
    if (fields >> extra) throw ParseError("trailing tokens after intrinsics", line_no);
    K.validate();
    return K;
  }
  throw ParseError("no intrinsics line found", 0);
}

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open intrinsics file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_intrinsics(buf.str());
}

void save_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& K) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write intrinsics file " + path.string());
  out << "# fx fy cx cy width height\n"
      << std::setprecision(17) << K.fx << ' ' << K.fy << ' ' << K.cx << ' ' << K.cy << ' '
      << K.width << ' ' << K.height << '\n';
}

Eigen::Matrix<double, 6, 1> Pose6::vector() const {
  Eigen::Matrix<double, 6, 1> p;
  p << v, omega;
  return p;
}

Pose6 Pose6::from_vector(const Eigen::Matrix<double, 6, 1>& p) {
  return {p.head<3>(), p.tail<3>()};
}

FlowMatrix flow_matrix(double x, double y, double Z) {
  if (!(Z > 0.0)) throw InvalidArgument("depth must be positive");
  const double inv_z = 1.0 / Z;
  FlowMatrix A;
  A << -inv_z, 0.0, x * inv_z, x * y, -1.0 - x * x, y,
       0.0, -inv_z, y * inv_z, 1.0 + y * y, -x * y, -x;
  return A;
}

ImageVelocity flow_at(double x, double y, double Z, const Pose6& pose) {
  if (!(Z > 0.0)) throw InvalidArgument("depth must be positive");
  const Vec3& v = pose.v;
  const Vec3& w = pose.omega;
  const double u_t = (-v.x() + x * v.z()) / Z;
  const double v_t = (-v.y() + y * v.z()) / Z;
  const double u_r = x * y * w.x() - (1.0 + x * x) * w.y() + y * w.z();
  const double v_r = (1.0 + y * y) * w.x() - x * y * w.y() - x * w.z();
  return {u_t + u_r, v_t + v_r};
}

DepthMap::DepthMap(SensorGeometry geometry) : depth_(geometry, 0.0), valid_(geometry, 0) {}

DepthMap DepthMap::from_values(const Image<double>& values) {
  DepthMap out(values.geometry());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double z = values[i];
    if (std::isfinite(z) && z > 0.0) {
      out.depth_[i] = z;
      out.valid_[i] = 1;
    }
  }
  return out;
}

DepthMap DepthMap::constant(SensorGeometry geometry, double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth)) throw InvalidArgument("depth must be positive");
  DepthMap out(geometry);
  out.depth_.fill(depth);
  out.valid_.fill(1);
  return out;
}

void DepthMap::set(int x, int y, double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth)) throw InvalidArgument("depth must be positive");
  depth_(x, y) = depth;
  valid_(x, y) = 1;
}

void DepthMap::invalidate(int x, int y) {
  depth_(x, y) = 0.0;
  valid_(x, y) = 0;
}

std::size_t DepthMap::valid_count() const {
  std::size_t n = 0;
  for (unsigned char v : valid_.data()) n += v != 0;
  return n;
}

double DepthMap::mean_valid() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < depth_.size(); ++i) {
    if (valid_[i]) {
      sum += depth_[i];
      ++n;
    }
  }
  if (n == 0) throw InsufficientData("depth map has no valid pixels");
  return sum / static_cast<double>(n);
}

DepthMap DepthMap::normalized_by_mean() const { return scaled(1.0 / mean_valid()); }

DepthMap DepthMap::scaled(double s) const {
  if (!(s > 0.0)) throw InvalidArgument("depth scale must be positive");
  DepthMap out = *this;
  for (std::size_t i = 0; i < depth_.size(); ++i) {
    if (valid_[i]) out.depth_[i] = depth_[i] * s;
  }
  return out;
}

MixturePoseField::MixturePoseField(Pose6 ego, std::vector<Vec3> object_translations,
                                   SensorGeometry geometry, std::vector<double> weights)
    : ego_(std::move(ego)),
      translations_(std::move(object_translations)),
      geometry_(geometry),
      weights_(std::move(weights)) {
  const std::size_t c = components();
  if (weights_.size() != c * geometry_.pixels()) {
    throw InvalidArgument("mixture weights must have (C + 1) entries per pixel");
  }
  if (!ego_.finite()) throw InvalidArgument("ego pose must be finite");
  for (const Vec3& t : translations_) {
    if (!t.allFinite()) throw InvalidArgument("object translations must be finite");
  }
  for (std::size_t i = 0; i < geometry_.pixels(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double w = weights_[i * c + j];
      if (!(w >= 0.0)) throw InvalidArgument("mixture weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw InvalidArgument("mixture weights must sum to 1 at pixel " + std::to_string(i));
    }
  }
}

MixturePoseField MixturePoseField::ego_only(const Pose6& ego, SensorGeometry geometry) {
  return MixturePoseField(ego, {}, geometry, std::vector<double>(geometry.pixels(), 1.0));
}

Pose6 pixel_pose(const MixturePoseField& field, std::size_t i) {
  Pose6 p = field.ego();
  const auto& t = field.object_translations();
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double m = field.weight(i, j + 1);
    if (m != 0.0) p.v += m * t[j];
  }
  return p;
}

FlowField flow_field(const DepthMap& depth, const MixturePoseField& field,
                     const CameraIntrinsics& K) {
  const SensorGeometry g = depth.geometry();
  if (!(g == field.geometry()) || !(g == K.geometry())) {
    throw GeometryMismatch("depth, mixture weights and intrinsics must share geometry");
  }
  FlowField flow(g);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const std::size_t i = g.index(x, y);
      if (!depth.valid(i)) continue;
      const NormalizedPoint n = normalize_coords(x, y, K);
      const ImageVelocity f = flow_at(n.x, n.y, depth[i], pixel_pose(field, i));
      flow.u[i] = f.u * K.fx;
      flow.v[i] = f.v * K.fy;
      flow.valid[i] = 1;
    }
  }
  return flow;
}

FlowField flow_field(const DepthMap& depth, const Pose6& pose, const CameraIntrinsics& K) {
  return flow_field(depth, MixturePoseField::ego_only(pose, depth.geometry()), K);
}

}  // namespace evmotion
