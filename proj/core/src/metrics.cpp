#include "evmotion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "evmotion/errors.hpp"

namespace evmotion {
namespace {

void check_rotation(const Eigen::Matrix3d& R) {
  if (!R.allFinite() || (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      R.determinant() < 0.0) {
    throw InvalidArgument("matrix is not a rotation");
  }
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

struct SharedPixels {
  std::vector<double> pred;
  std::vector<double> gt;
};

SharedPixels shared(const DepthMap& pred, const DepthMap& gt) {
  if (!(pred.geometry() == gt.geometry())) throw GeometryMismatch("depth maps differ in size");
  SharedPixels s;
  const std::size_t n = gt.geometry().pixels();
  for (std::size_t i = 0; i < n; ++i) {
    if (!pred.valid(i) || !gt.valid(i)) continue;
    if (!(pred[i] > 0.0) || !(gt[i] > 0.0)) throw InvalidArgument("non-positive depth");
    s.pred.push_back(pred[i]);
    s.gt.push_back(gt[i]);
  }
  if (s.gt.empty()) throw InsufficientData("no shared valid depth pixels");
  return s;
}

double alignment_scale(const SharedPixels& s, DepthAlignment alignment) {
  switch (alignment) {
    case DepthAlignment::kMedian:
      return median(s.gt) / median(s.pred);
    case DepthAlignment::kMean: {
      double sp = 0.0, sg = 0.0;
      for (std::size_t i = 0; i < s.gt.size(); ++i) {
        sp += s.pred[i];
        sg += s.gt[i];
      }
      return sg / sp;
    }
    case DepthAlignment::kNone:
      break;
  }
  return 1.0;
}

}  // namespace

DepthAlignment parse_depth_alignment(std::string_view name) {
  if (name == "median") return DepthAlignment::kMedian;
  if (name == "mean") return DepthAlignment::kMean;
  if (name == "none") return DepthAlignment::kNone;
  throw InvalidArgument("unknown depth alignment '" + std::string(name) + "'");
}

std::string_view to_string(DepthAlignment a) {
  switch (a) {
    case DepthAlignment::kMedian:
      return "median";
    case DepthAlignment::kMean:
      return "mean";
    case DepthAlignment::kNone:
      break;
  }
  return "none";
}

double aee_scale(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.size() != gt.size()) throw InvalidArgument("aee inputs differ in length");
  double pg = 0.0, pp = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pg += pred[i].dot(gt[i]);
    pp += pred[i].squaredNorm();
  }
  if (!(pp > 0.0)) throw InvalidArgument("cannot scale all-zero predictions");
  return pg / pp;
}

double aee(std::span<const Vec3> pred, std::span<const Vec3> gt, bool scale_from_gt) {
  if (pred.size() != gt.size()) throw InvalidArgument("aee inputs differ in length");
  if (pred.empty()) throw InsufficientData("aee of an empty sequence");
  const double s = scale_from_gt ? aee_scale(pred, gt) : 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (s * pred[i] - gt[i]).norm();
  return sum / static_cast<double>(pred.size());
}

double rre(const Eigen::Matrix3d& pred, const Eigen::Matrix3d& gt) {
  check_rotation(pred);
  check_rotation(gt);
  const Eigen::Matrix3d R = pred.transpose() * gt;
  // atan2 form stays accurate near 0 and pi, unlike acos of the trace.
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * w.norm(), 0.5 * (R.trace() - 1.0));
}

double rre(const Eigen::Quaterniond& pred, const Eigen::Quaterniond& gt) {
  for (const auto* q : {&pred, &gt}) {
    if (std::abs(q->norm() - 1.0) > 1e-6) throw InvalidArgument("quaternion is not unit");
  }
  return rre(pred.normalized().toRotationMatrix(), gt.normalized().toRotationMatrix());
}

double rre_rate(const Vec3& omega_pred, const Vec3& omega_gt, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const auto rot = [dt](const Vec3& w) -> Eigen::Matrix3d {
    const double a = w.norm() * dt;
    if (a == 0.0) return Eigen::Matrix3d::Identity();
    return Eigen::AngleAxisd(a, w.normalized()).toRotationMatrix();
  };
  return rre(rot(omega_pred), rot(omega_gt)) / dt;
}

double iou(const Image<double>& pred_weights, const Mask& gt, double threshold) {
  if (!(pred_weights.geometry() == gt.geometry())) throw GeometryMismatch("mask sizes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool p = pred_weights[i] >= threshold;
    const bool g = gt[i] != 0;
    inter += p && g;
    uni += p || g;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double depth_alignment_scale(const DepthMap& pred, const DepthMap& gt, DepthAlignment alignment) {
  return alignment_scale(shared(pred, gt), alignment);
}

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt, DepthAlignment alignment) {
  const SharedPixels s = shared(pred, gt);
  const double scale = alignment_scale(s, alignment);
  const std::size_t n = s.gt.size();
  const double t1 = 1.25, t2 = t1 * t1, t3 = t2 * t1;

  double abs_rel = 0.0, d_sum = 0.0, d2_sum = 0.0;
  std::size_t a1 = 0, a2 = 0, a3 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = scale * s.pred[i];
    const double g = s.gt[i];
    abs_rel += std::abs(p - g) / g;
    const double d = std::log(p) - std::log(g);
    d_sum += d;
    d2_sum += d * d;
    const double ratio = std::max(p / g, g / p);
    a1 += ratio < t1;
    a2 += ratio < t2;
    a3 += ratio < t3;
  }
  const double nn = static_cast<double>(n);
  DepthMetrics m;
  m.abs_rel = abs_rel / nn;
  m.rmse_log = std::sqrt(d2_sum / nn);
  const double mean_d = d_sum / nn;
  m.silog = std::max(0.0, d2_sum / nn - mean_d * mean_d);
  m.delta1 = static_cast<double>(a1) / nn;
  m.delta2 = static_cast<double>(a2) / nn;
  m.delta3 = static_cast<double>(a3) / nn;
  m.pixels = n;
  m.scale = scale;
  return m;
}

DepthMetrics mean_depth_metrics(std::span<const DepthMetrics> frames) {
  if (frames.empty()) throw InsufficientData("no frames to average");
  DepthMetrics m;
  m.scale = 0.0;
  for (const DepthMetrics& f : frames) {
    m.abs_rel += f.abs_rel;
    m.rmse_log += f.rmse_log;
    m.silog += f.silog;
    m.delta1 += f.delta1;
    m.delta2 += f.delta2;
    m.delta3 += f.delta3;
    m.pixels += f.pixels;
    m.scale += f.scale;
  }
  const double n = static_cast<double>(frames.size());
  m.abs_rel /= n;
  m.rmse_log /= n;
  m.silog /= n;
  m.delta1 /= n;
  m.delta2 /= n;
  m.delta3 /= n;
  m.scale /= n;
  return m;
}

MotionMetrics mean_motion_metrics(std::span<const MotionMetrics> frames) {
  if (frames.empty()) throw InsufficientData("no frames to average");
  MotionMetrics m;
  for (const MotionMetrics& f : frames) {
    m.aee += f.aee;
    m.rre += f.rre;
  }
  m.aee /= static_cast<double>(frames.size());
  m.rre /= static_cast<double>(frames.size());
  return m;
}

}  // namespace evmotion
