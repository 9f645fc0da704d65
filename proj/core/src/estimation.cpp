#include "evmotion/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "evmotion/errors.hpp"
#include "evmotion/optimizer.hpp"

namespace evmotion {
namespace {

CompensationOptions compensation_options(const EstimatorConfig& c) {
  CompensationOptions o;
  o.fine_dt = c.fine_dt;
  o.p = c.loss_weights.p;
  o.splat = c.splat;
  o.coarse_weight = c.coarse_weight;
  o.fine_weight = c.fine_weight;
  o.out_of_bounds_penalty = c.out_of_bounds_penalty;
  return o;
}

DepthMap working_depth(const DepthMap& depth, const CameraIntrinsics& K,
                       const EstimatorConfig& config) {
  const bool planar = config.depth_source == DepthSource::kConstantPlane ||
                      config.mode == MotionModel::kFourDofPlanar;
  if (planar) return DepthMap::constant(K.geometry(), config.plane_depth);
  if (!(depth.geometry() == K.geometry())) throw GeometryMismatch("depth and intrinsics differ");
  const std::size_t valid = depth.valid_count();
  if (valid == 0 || valid * 100 < depth.geometry().pixels()) {
    throw InsufficientData("depth map is valid on fewer than 1% of pixels");
  }
  return depth;
}

void check_slices(std::span<const EventSlice> slices) {
  if (slices.size() != 3 && slices.size() != 5) {
    throw InvalidArgument("estimation needs 3 or 5 consecutive slices, got " +
                          std::to_string(slices.size()));
  }
}

// Uniform sample in the unit ball of the given dimension, by rejection.
std::vector<double> sample_ball(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    std::vector<double> x(dim);
    double r2 = 0.0;
    for (double& c : x) {
      c = u(rng);
      r2 += c * c;
    }
    if (r2 <= 1.0) return x;
  }
}

struct MultistartOutcome {
  SimplexResult best;
  int iterations = 0;
  int evaluations = 0;
};

// Runs the simplex from x0 = 0 and from multistart - 1 random perturbations.
// `radius` gives the per-coordinate scale of the perturbation ball.
MultistartOutcome run_multistart(const Objective& f, const std::vector<double>& step,
                                 const std::vector<double>& radius,
                                 const EstimatorConfig& config) {
  SimplexOptions options;
  options.max_iters = config.max_iters;
  options.tol = config.tol;
  options.initial_step = step;

  std::mt19937_64 rng(config.seed);
  MultistartOutcome out;
  for (int start = 0; start < config.multistart; ++start) {
    std::vector<double> x0(step.size(), 0.0);
    if (start > 0) {
      const std::vector<double> b = sample_ball(rng, step.size());
      for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = b[i] * radius[i];
    }
    SimplexResult r = minimize_simplex(f, x0, options);
    out.iterations += r.iterations;
    out.evaluations += r.evaluations;
    if (start == 0 || r.value < out.best.value) out.best = std::move(r);
  }
  return out;
}

}  // namespace

MotionModel parse_motion_model(std::string_view name) {
  if (name == "6dof") return MotionModel::kSixDof;
  if (name == "4dof" || name == "4dof-planar") return MotionModel::kFourDofPlanar;
  throw InvalidArgument("unknown motion model '" + std::string(name) + "'");
}

DepthSource parse_depth_source(std::string_view name) {
  if (name == "ground-truth" || name == "gt") return DepthSource::kGroundTruth;
  if (name == "constant-plane" || name == "plane") return DepthSource::kConstantPlane;
  throw InvalidArgument("unknown depth source '" + std::string(name) + "'");
}

std::string_view to_string(MotionModel m) {
  return m == MotionModel::kSixDof ? "6dof" : "4dof-planar";
}

std::string_view to_string(DepthSource d) {
  return d == DepthSource::kGroundTruth ? "ground-truth" : "constant-plane";
}

void EstimatorConfig::validate() const {
  if (max_iters <= 0) throw InvalidArgument("max_iters must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (multistart < 1) throw InvalidArgument("multistart must be >= 1");
  if (!(plane_depth > 0.0)) throw InvalidArgument("plane_depth must be positive");
  if (!(translation_step > 0.0) || !(rotation_step > 0.0)) {
    throw InvalidArgument("initial simplex steps must be positive");
  }
  if (!(restart_translation_radius >= 0.0) || !(restart_rotation_radius >= 0.0)) {
    throw InvalidArgument("restart radii must be >= 0");
  }
  loss_weights.validate();
}

EgomotionObjective::EgomotionObjective(std::span<const EventSlice> slices, const DepthMap& depth,
                                       const CameraIntrinsics& K, const EstimatorConfig& config)
    : mode_(config.mode),
      compensator_(slices, working_depth(depth, K, config), K, compensation_options(config)),
      depth_scale_(working_depth(depth, K, config).mean_valid()),
      workspace_(compensator_.make_workspace()) {}

std::size_t EgomotionObjective::dimension() const {
  return mode_ == MotionModel::kSixDof ? 6 : 4;
}

// Translation parameters are divided by the mean depth so the simplex works in
// normalized units and scaling the depth scales the recovered translation.
Pose6 EgomotionObjective::to_pose(std::span<const double> params) const {
  if (params.size() != dimension()) throw InvalidArgument("parameter dimension mismatch");
  Pose6 pose;
  pose.v = Vec3(params[0], params[1], params[2]) * depth_scale_;
  if (mode_ == MotionModel::kSixDof) {
    pose.omega = Vec3(params[3], params[4], params[5]);
  } else {
    pose.omega = Vec3(0.0, 0.0, params[3]);
  }
  return pose;
}

std::vector<double> EgomotionObjective::to_params(const Pose6& pose) const {
  const Vec3 v = pose.v / depth_scale_;
  if (mode_ == MotionModel::kSixDof) {
    return {v.x(), v.y(), v.z(), pose.omega.x(), pose.omega.y(), pose.omega.z()};
  }
  return {v.x(), v.y(), v.z(), pose.omega.z()};
}

double EgomotionObjective::operator()(std::span<const double> params) const {
  return (*this)(to_pose(params));
}

double EgomotionObjective::operator()(const Pose6& pose) const {
  return compensator_.evaluate(pose, workspace_).total;
}

CompensationLosses EgomotionObjective::losses(const Pose6& pose) const {
  return compensator_.evaluate(pose, workspace_);
}

EstimateResult estimate_egomotion(std::span<const EventSlice> slices, const DepthMap& depth,
                                  const CameraIntrinsics& K, const EstimatorConfig& config) {
  config.validate();
  check_slices(slices);
  std::size_t total = 0;
  for (const EventSlice& s : slices) total += s.size();
  if (slices[slices.size() / 2].empty()) throw InsufficientData("middle slice is empty");
  if (total < kMinEgomotionEvents) throw InsufficientData("insufficient events");

  const EgomotionObjective objective(slices, depth, K, config);
  if (objective.compensator().event_count() < kMinEgomotionEvents) {
    throw InsufficientData("insufficient events with valid depth");
  }

  const std::size_t dim = objective.dimension();
  std::vector<double> step(dim), radius(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const bool translation = i < 3;
    step[i] = translation ? config.translation_step : config.rotation_step;
    radius[i] = translation ? config.restart_translation_radius : config.restart_rotation_radius;
  }

  const MultistartOutcome run = run_multistart(
      [&](std::span<const double> x) { return objective(x); }, step, radius, config);

  EstimateResult result;
  result.pose = objective.to_pose(run.best.x);
  result.objective = run.best.value;
  result.iterations = run.iterations;
  result.evaluations = run.evaluations;
  result.converged = run.best.converged;
  result.history = run.best.best_history;
  result.losses = objective.losses(result.pose);
  result.diagnostics = result.losses.diagnostics;
  return result;
}

ObjectEstimate estimate_object_velocity(std::span<const EventSlice> slices,
                                        const DepthMap& depth, const CameraIntrinsics& K,
                                        const Mask& mask, const Pose6& ego,
                                        const EstimatorConfig& config) {
  config.validate();
  check_slices(slices);
  if (!(mask.geometry() == K.geometry())) throw GeometryMismatch("mask and intrinsics differ");
  if (std::none_of(mask.data().begin(), mask.data().end(), [](unsigned char m) { return m; })) {
    throw InvalidArgument("object mask is empty");
  }
  if (!ego.finite()) throw InvalidArgument("ego pose must be finite");

  const DepthMap working = working_depth(depth, K, config);
  const MotionCompensator compensator(slices, working, K, compensation_options(config), &mask);
  if (compensator.event_count() < kMinObjectEvents) {
    throw InsufficientData("object mask covers fewer than " + std::to_string(kMinObjectEvents) +
                           " events");
  }

  double depth_sum = 0.0;
  std::size_t depth_n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && working.valid(i)) {
      depth_sum += working[i];
      ++depth_n;
    }
  }
  const double scale = depth_n ? depth_sum / static_cast<double>(depth_n) : 1.0;

  MotionCompensator::Workspace ws = compensator.make_workspace();
  const auto pose_of = [&](std::span<const double> t) {
    return Pose6{ego.v + Vec3(t[0], t[1], t[2]) * scale, ego.omega};
  };
  const Objective f = [&](std::span<const double> t) {
    return compensator.evaluate(pose_of(t), ws).total;
  };

  const std::vector<double> step(3, config.translation_step);
  const std::vector<double> radius(3, config.restart_translation_radius);
  const MultistartOutcome run = run_multistart(f, step, radius, config);

  ObjectEstimate out;
  out.translation = Vec3(run.best.x[0], run.best.x[1], run.best.x[2]) * scale;
  out.velocity = -(ego.v + out.translation);
  out.objective = run.best.value;
  out.iterations = run.iterations;
  out.evaluations = run.evaluations;
  out.converged = run.best.converged;
  out.events = compensator.event_count();
  return out;
}

}  // namespace evmotion
