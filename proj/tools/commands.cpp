#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "evmotion/compensator.hpp"
#include "evmotion/errors.hpp"
#include "evmotion/estimation.hpp"
#include "evmotion/events.hpp"
#include "evmotion/groundtruth.hpp"
#include "evmotion/gt_io.hpp"
#include "evmotion/image_io.hpp"
#include "evmotion/metrics.hpp"
#include "evmotion/synth.hpp"
#include "evmotion/warping.hpp"

namespace evmotion::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json pose_json(const Pose6& p) { return {{"v", vec_json(p.v)}, {"omega", vec_json(p.omega)}}; }

Vec3 json_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector", 0);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json diagnostics_json(const WarpDiagnostics& d) {
  return {{"events_in", d.events_in},
          {"events_out_of_bounds", d.events_out_of_bounds},
          {"events_without_flow", d.events_without_flow},
          {"mean_displacement_px", d.mean_displacement}};
}

Json losses_json(const CompensationLosses& l) {
  return {{"coarse", l.coarse}, {"fine", l.fine}, {"penalty", l.penalty}, {"total", l.total}};
}

CameraIntrinsics intrinsics(const Common& c) {
  CameraIntrinsics K = c.intrinsics.empty() ? CameraIntrinsics{} : load_intrinsics(c.intrinsics);
  K.validate();
  return K;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

// JSON goes to --out when given, stdout otherwise.
void emit(const Json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

Pose6 parse_pose(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw UsageError("pose must be six comma separated numbers, got '" + text + "'");
    }
  }
  if (v.size() != 6) throw UsageError("pose must be six comma separated numbers");
  return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

Pose6 load_pose_json(const fs::path& path) {
  const nlohmann::json j = read_json(path);
  try {
    const nlohmann::json& p = j.at("pose");
    return {json_vec(p.at("v")), json_vec(p.at("omega"))};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

struct Window {
  std::vector<EventSlice> slices;
  std::size_t events = 0;
};

Window load_window(const WindowFlags& w, const CameraIntrinsics& K) {
  if (!(w.dt_ms > 0.0) || !(w.fine_dt_ms > 0.0)) throw UsageError("durations must be positive");
  if (w.start_slice < 0) throw UsageError("--start-slice must be >= 0");
  LoadStats stats;
  const std::vector<Event> events = load_events(w.events, K.geometry(), {}, &stats);
  if (stats.out_of_order) {
    std::cerr << "warning: " << stats.out_of_order << " out-of-order events were re-sorted\n";
  }
  if (events.empty()) throw InsufficientData("event file " + w.events + " has no events");
  std::vector<EventSlice> all = slice_stream(events, w.dt_ms * 1e-3, K.geometry());
  const std::size_t count = 2 * static_cast<std::size_t>(w.K) + 1;
  const auto start = static_cast<std::size_t>(w.start_slice);
  if (start + count > all.size()) {
    throw InsufficientData("need " + std::to_string(count) + " slices from index " +
                           std::to_string(start) + ", the stream has " +
                           std::to_string(all.size()));
  }
  Window out;
  out.slices.assign(all.begin() + static_cast<std::ptrdiff_t>(start),
                    all.begin() + static_cast<std::ptrdiff_t>(start + count));
  for (const EventSlice& s : out.slices) out.events += s.size();
  return out;
}

Json window_json(const Window& w) {
  const EventSlice& mid = w.slices[w.slices.size() / 2];
  return {{"t_start", w.slices.front().t_start()},
          {"t_end", w.slices.back().t_end()},
          {"t_ref", mid.center()},
          {"slices", w.slices.size()},
          {"events", w.events}};
}

DepthMap load_depth(const std::string& path, const CameraIntrinsics& K) {
  DepthMap d = read_depth_pfm(path);
  if (!(d.geometry() == K.geometry())) throw GeometryMismatch("depth map size differs from sensor");
  return d;
}

Mask gray_counts(const Image<double>& img, double max_count) {
  return to_gray(img, max_count > 0.0 ? 255.0 / max_count : 0.0);
}

double max_value(const Image<double>& img) {
  double m = 0.0;
  for (double v : img.data()) m = std::max(m, v);
  return m;
}

void write_map(const fs::path& dir, const std::string& stem, const SliceMap& map) {
  const double scale = std::max(max_value(map.pos_count), max_value(map.neg_count));
  write_pgm(dir / (stem + "_pos.pgm"), gray_counts(map.pos_count, scale));
  write_pgm(dir / (stem + "_neg.pgm"), gray_counts(map.neg_count, scale));
  write_pgm(dir / (stem + "_time.pgm"), to_gray(map.time_agg, 255.0));
}

// Every event of the window warped to t_ref and accumulated in one map.
SliceMap stacked_map(const Window& w, const DepthMap& depth, const Pose6& pose,
                     const CameraIntrinsics& K, double t_ref) {
  const FlowField flow = flow_field(depth, pose, K);
  WarpedEvents all;
  all.geometry = K.geometry();
  all.t_start = w.slices.front().t_start();
  all.t_end = w.slices.back().t_end();
  for (const EventSlice& s : w.slices) {
    WarpedEvents part = warp_events(s, flow, t_ref);
    all.events.insert(all.events.end(), part.events.begin(), part.events.end());
  }
  return project_warped(all, Splat::kNearest);
}

std::string out_dir(const Common& c) {
  if (c.out.empty()) throw UsageError("--out is required");
  return c.out;
}

bool is_object(int value, int object_id) {
  if (object_id >= 0) return value == object_id;
  return value != kBackgroundId && value != kEmptyId;
}

// Prediction frames: paired by index with the prediction's own manifest when
// present, otherwise by the ground-truth file names.
struct Pairing {
  FrameManifest gt;
  std::optional<FrameManifest> pred;
};

Pairing pair_frames(const EvalArgs& a) {
  Pairing p;
  p.gt = load_frame_manifest(a.gt);
  if (p.gt.frames.empty()) throw InsufficientData("ground truth has no frames");
  if (fs::exists(fs::path(a.pred) / "manifest.json") || fs::is_regular_file(a.pred)) {
    p.pred = load_frame_manifest(a.pred);
    if (p.pred->frames.size() != p.gt.frames.size()) {
      throw InvalidArgument("prediction has " + std::to_string(p.pred->frames.size()) +
                            " frames, ground truth " + std::to_string(p.gt.frames.size()));
    }
  } else if (!fs::is_directory(a.pred)) {
    throw IoError("prediction directory " + a.pred + " not found");
  }
  return p;
}

fs::path pred_file(const EvalArgs& a, const Pairing& p, std::size_t k, bool depth) {
  const fs::path base = fs::is_directory(a.pred) ? fs::path(a.pred) : fs::path(a.pred).parent_path();
  const FrameRecord& r = p.pred ? p.pred->frames[k] : p.gt.frames[k];
  return base / (depth ? r.depth : r.mask);
}

fs::path gt_base(const EvalArgs& a) {
  return fs::is_directory(a.gt) ? fs::path(a.gt) : fs::path(a.gt).parent_path();
}

Json depth_json(const DepthMetrics& m) {
  return {{"abs_rel", m.abs_rel}, {"rmse_log", m.rmse_log}, {"silog", m.silog},
          {"delta1", m.delta1},   {"delta2", m.delta2},     {"delta3", m.delta3},
          {"pixels", m.pixels},   {"scale", m.scale}};
}

}  // namespace

int run_slice(const SliceArgs& a) {
  const CameraIntrinsics K = intrinsics(a.common);
  const fs::path dir = out_dir(a.common);
  if (!(a.dt_ms > 0.0)) throw UsageError("--dt-ms must be positive");
  const std::vector<Event> events = load_events(a.events, K.geometry());
  if (events.empty()) {
    std::cerr << "warning: " << a.events << " has no events; nothing written\n";
    return kOk;
  }
  const std::vector<EventSlice> slices = slice_stream(events, a.dt_ms * 1e-3, K.geometry());
  fs::create_directories(dir);
  Json list = Json::array();
  for (std::size_t k = 0; k < slices.size(); ++k) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "slice_%04zu", k);
    write_map(dir, stem, project_slice(slices[k]));
    list.push_back({{"index", k},
                    {"t_start", slices[k].t_start()},
                    {"t_end", slices[k].t_end()},
                    {"events", slices[k].size()},
                    {"pos", std::string(stem) + "_pos.pgm"},
                    {"neg", std::string(stem) + "_neg.pgm"},
                    {"time", std::string(stem) + "_time.pgm"}});
  }
  const Json manifest = {{"schema", kSchemaVersion},
                         {"dt", a.dt_ms * 1e-3},
                         {"t0", slices.front().t_start()},
                         {"events", events.size()},
                         {"slices", list}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cerr << "wrote " << slices.size() << " slices to " << dir.string() << '\n';
  return kOk;
}

int run_compensate(const CompensateArgs& a) {
  const CameraIntrinsics K = intrinsics(a.common);
  const fs::path dir = out_dir(a.common);
  const int pose_sources = !a.pose.empty() + !a.pose_json.empty() + !a.gt.empty();
  if (pose_sources != 1) {
    throw UsageError("give exactly one of --pose, --pose-json or --gt");
  }
  const Window w = load_window(a.window, K);
  const double t_ref = w.slices[w.slices.size() / 2].center();

  Pose6 pose;
  std::optional<DepthMap> depth;
  Json source;
  if (!a.gt.empty()) {
    const FrameManifest m = load_frame_manifest(a.gt);
    if (m.frames.empty()) throw InsufficientData("ground-truth manifest has no frames");
    const auto it = std::min_element(m.frames.begin(), m.frames.end(), [&](auto& x, auto& y) {
      return std::abs(x.t - t_ref) < std::abs(y.t - t_ref);
    });
    const GtFrame frame = load_frame(a.gt, *it);
    pose = frame.cam_velocity;
    depth = frame.depth;
    source = {{"pose", "ground-truth"}, {"frame_t", it->t}};
  } else {
    pose = a.pose.empty() ? load_pose_json(a.pose_json) : parse_pose(a.pose);
    source = {{"pose", a.pose.empty() ? "json" : "flag"}};
  }
  if (!a.depth.empty()) {
    depth = load_depth(a.depth, K);
  } else if (a.plane_depth > 0.0) {
    depth = DepthMap::constant(K.geometry(), a.plane_depth);
  }
  if (!depth) throw UsageError("give --depth, --plane-depth or --gt");
  if (!pose.finite()) throw InvalidArgument("pose must be finite");

  CompensationOptions opts;
  opts.fine_dt = a.window.fine_dt_ms * 1e-3;
  opts.p = a.window.p;
  const MotionCompensator comp(w.slices, *depth, K, opts);
  const CompensationLosses before = comp.evaluate(Pose6{});
  const CompensationLosses after = comp.evaluate(pose);

  fs::create_directories(dir);
  write_map(dir, "before", stacked_map(w, *depth, Pose6{}, K, t_ref));
  write_map(dir, "after", stacked_map(w, *depth, pose, K, t_ref));
  const Json report = {{"schema", kSchemaVersion},
                       {"pose", pose_json(pose)},
                       {"source", source},
                       {"window", window_json(w)},
                       {"p", opts.p},
                       {"fine_dt", opts.fine_dt},
                       {"before", losses_json(before)},
                       {"after", losses_json(after)},
                       {"diagnostics", diagnostics_json(after.diagnostics)}};
  write_text(dir / "report.json", report.dump(2) + "\n");
  return kOk;
}

namespace {

EstimatorConfig estimator_config(const EstimateArgs& a) {
  EstimatorConfig c;
  c.mode = parse_motion_model(a.mode);
  c.multistart = a.multistart;
  c.max_iters = a.max_iters;
  c.seed = a.common.seed;
  c.fine_dt = a.window.fine_dt_ms * 1e-3;
  c.loss_weights.p = a.window.p;
  if (a.plane_depth > 0.0) {
    c.depth_source = DepthSource::kConstantPlane;
    c.plane_depth = a.plane_depth;
  } else if (a.depth.empty()) {
    throw UsageError("give --depth or --plane-depth");
  }
  return c;
}

DepthMap estimator_depth(const EstimateArgs& a, const CameraIntrinsics& K) {
  if (!a.depth.empty()) return load_depth(a.depth, K);
  return DepthMap::constant(K.geometry(), a.plane_depth);
}

std::string scale_note(const EstimatorConfig& c) {
  if (c.depth_source == DepthSource::kGroundTruth && c.mode == MotionModel::kSixDof) {
    return "metric: translation in the units of the supplied depth map";
  }
  std::ostringstream s;
  s << "relative: translation assumes a plane at depth " << c.plane_depth
    << "; true translation = reported * (true depth / " << c.plane_depth << ")";
  return s.str();
}

}  // namespace

int run_estimate_ego(const EstimateArgs& a) {
  const CameraIntrinsics K = intrinsics(a.common);
  const EstimatorConfig cfg = estimator_config(a);
  const Window w = load_window(a.window, K);
  const DepthMap depth = estimator_depth(a, K);
  const EstimateResult r = estimate_egomotion(w.slices, depth, K, cfg);
  std::cerr << "translation scale: " << scale_note(cfg) << '\n';
  const Json out = {{"schema", kSchemaVersion},
                    {"mode", std::string(to_string(cfg.mode))},
                    {"depth_source", std::string(to_string(cfg.depth_source))},
                    {"translation_scale", scale_note(cfg)},
                    {"seed", cfg.seed},
                    {"pose", pose_json(r.pose)},
                    {"objective", r.objective},
                    {"iterations", r.iterations},
                    {"evaluations", r.evaluations},
                    {"converged", r.converged},
                    {"losses", losses_json(r.losses)},
                    {"diagnostics", diagnostics_json(r.diagnostics)},
                    {"window", window_json(w)}};
  emit(out, a.common.out);
  return kOk;
}

int run_estimate_obj(const EstimateArgs& a) {
  const CameraIntrinsics K = intrinsics(a.common);
  EstimateArgs fixed = a;
  fixed.mode = "6dof";
  const EstimatorConfig cfg = estimator_config(fixed);
  if (a.ego.empty() == a.ego_json.empty()) throw UsageError("give --ego or --ego-json");
  const Pose6 ego = a.ego.empty() ? load_pose_json(a.ego_json) : parse_pose(a.ego);

  const Mask raw = read_pgm(a.mask);
  if (!(raw.geometry() == K.geometry())) throw GeometryMismatch("mask size differs from sensor");
  Mask mask(K.geometry(), 0);
  for (std::size_t i = 0; i < raw.size(); ++i) mask[i] = is_object(raw[i], a.object_id);

  const Window w = load_window(a.window, K);
  const DepthMap depth = estimator_depth(a, K);
  const ObjectEstimate r = estimate_object_velocity(w.slices, depth, K, mask, ego, cfg);
  const Json out = {{"schema", kSchemaVersion},
                    {"depth_source", std::string(to_string(cfg.depth_source))},
                    {"translation_scale", scale_note(cfg)},
                    {"seed", cfg.seed},
                    {"ego", pose_json(ego)},
                    {"translation", vec_json(r.translation)},
                    {"velocity", vec_json(r.velocity)},
                    {"objective", r.objective},
                    {"iterations", r.iterations},
                    {"evaluations", r.evaluations},
                    {"converged", r.converged},
                    {"object_events", r.events},
                    {"window", window_json(w)}};
  emit(out, a.common.out);
  return kOk;
}

int run_gen_gt(const GenGtArgs& a) {
  const fs::path dir = out_dir(a.common);
  Scene scene = load_scene(a.scene);
  if (!a.common.intrinsics.empty()) scene.K = intrinsics(a.common);
  FrameOptions opts;
  opts.velocity_dt = a.velocity_dt_ms * 1e-3;
  const std::vector<GtFrame> frames = generate_frames(scene, a.fps, opts);
  write_frames(dir, frames, a.fps);
  std::cerr << "wrote " << frames.size() << " frames to " << dir.string() << '\n';
  return kOk;
}

int run_eval_depth(const EvalArgs& a) {
  const DepthAlignment alignment = parse_depth_alignment(a.alignment);
  const Pairing p = pair_frames(a);
  std::vector<DepthMetrics> per;
  Json frames = Json::array();
  for (std::size_t k = 0; k < p.gt.frames.size(); ++k) {
    const FrameRecord& r = p.gt.frames[k];
    if (r.depth.empty()) continue;
    const DepthMap gt = read_depth_pfm(gt_base(a) / r.depth);
    const DepthMap pred = read_depth_pfm(pred_file(a, p, k, true));
    per.push_back(depth_metrics(pred, gt, alignment));
    Json f = {{"t", r.t}};
    f.update(depth_json(per.back()));
    frames.push_back(f);
  }
  const DepthMetrics mean = mean_depth_metrics(per);
  Json out = {{"schema", kSchemaVersion}, {"alignment", a.alignment}, {"frames", per.size()}};
  out.update(depth_json(mean));
  out["per_frame"] = frames;
  emit(out, a.common.out);
  return kOk;
}

int run_eval_motion(const EvalArgs& a) {
  const Pairing p = pair_frames(a);
  if (!p.pred) throw UsageError("eval-motion needs a prediction manifest.json");
  const double dt = p.gt.fps > 0.0 ? 1.0 / p.gt.fps : 1.0;

  std::vector<Vec3> pv, gv;
  std::vector<double> rre_frames;
  std::map<int, std::pair<std::vector<Vec3>, std::vector<Vec3>>> objects;
  for (std::size_t k = 0; k < p.gt.frames.size(); ++k) {
    const FrameRecord& g = p.gt.frames[k];
    const FrameRecord& q = p.pred->frames[k];
    if (std::abs(g.t - q.t) > 1e-6) {
      throw InvalidArgument("frame " + std::to_string(k) + " timestamps differ");
    }
    pv.push_back(q.cam_velocity.v);
    gv.push_back(g.cam_velocity.v);
    rre_frames.push_back(rre_rate(q.cam_velocity.omega, g.cam_velocity.omega, dt));
    for (const auto& [id, v] : g.object_velocities) {
      const auto it = q.object_velocities.find(id);
      if (it == q.object_velocities.end()) continue;
      objects[id].first.push_back(it->second);
      objects[id].second.push_back(v);
    }
  }
  const bool scale = a.scale_from_gt;
  double rre_mean = 0.0;
  for (double r : rre_frames) rre_mean += r;
  rre_mean /= static_cast<double>(rre_frames.size());

  Json objs = Json::object();
  for (const auto& [id, pg] : objects) {
    objs[std::to_string(id)] = {{"aee", aee(pg.first, pg.second, scale)},
                                {"frames", pg.first.size()}};
  }
  const Json out = {{"schema", kSchemaVersion},
                    {"frames", pv.size()},
                    {"aee", aee(pv, gv, scale)},
                    {"scale_from_gt", scale},
                    {"scale", scale ? aee_scale(pv, gv) : 1.0},
                    {"rre", rre_mean},
                    {"rre_convention", "axis-angle magnitude over one frame interval, rad/s"},
                    {"rre_frobenius_factor", kFrobeniusPerAxisAngle},
                    {"rre_dt", dt},
                    {"objects", objs}};
  emit(out, a.common.out);
  return kOk;
}

int run_eval_mask(const EvalArgs& a) {
  const Pairing p = pair_frames(a);
  std::vector<double> ious;
  Json frames = Json::array();
  for (std::size_t k = 0; k < p.gt.frames.size(); ++k) {
    const FrameRecord& r = p.gt.frames[k];
    if (r.mask.empty()) continue;
    const Mask gt_ids = read_pgm(gt_base(a) / r.mask);
    const Mask pred_raw = read_pgm(pred_file(a, p, k, false));
    Mask gt(gt_ids.geometry(), 0);
    for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = is_object(gt_ids[i], a.object_id);
    Image<double> weights(pred_raw.geometry(), 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      // Id maps (with a manifest) become 0/1; bare PGMs are weights * 255.
      weights[i] = p.pred ? (is_object(pred_raw[i], a.object_id) ? 1.0 : 0.0)
                          : pred_raw[i] / 255.0;
    }
    ious.push_back(iou(weights, gt, a.threshold));
    frames.push_back({{"t", r.t}, {"iou", ious.back()}});
  }
  if (ious.empty()) throw InsufficientData("no masks to evaluate");
  double mean = 0.0;
  for (double v : ious) mean += v;
  mean /= static_cast<double>(ious.size());
  const Json out = {{"schema", kSchemaVersion},
                    {"threshold", a.threshold},
                    {"frames", ious.size()},
                    {"iou", mean},
                    {"per_frame", frames}};
  emit(out, a.common.out);
  return kOk;
}

int run_synth(const SynthArgs& a) {
  const fs::path dir = out_dir(a.common);
  const CameraIntrinsics K = intrinsics(a.common);
  fs::create_directories(dir);
  if (a.kind == "room") {
    RoomConfig rc;
    rc.K = K;
    save_scene(dir, make_room_scene(rc));
    return kOk;
  }
  SynthConfig c;
  if (a.kind == "plane") {
    c = random_rigid_config(a.common.seed);
  } else if (a.kind == "object") {
    c = random_object_config(a.common.seed);
  } else {
    throw UsageError("--kind must be plane, object or room");
  }
  c.K = K;
  if (a.texture_points > 0) c.texture_points = a.texture_points;
  c.noise_events = a.noise_events;
  const SynthScene s = make_synthetic_scene(c);

  save_events(dir / "events.txt", s.events);
  write_depth_pfm(dir / "depth.pfm", s.depth);
  write_pgm(dir / "mask.pgm", s.object_mask);
  save_intrinsics(dir / "intrinsics.txt", K);
  Json truth = {{"schema", kSchemaVersion},
                {"kind", a.kind},
                {"seed", a.common.seed},
                {"pose", pose_json(s.ego)},
                {"t_ref", s.t_ref},
                {"slice_dt", c.slice_dt},
                {"slices", c.slices},
                {"events", s.events.size()},
                {"center_depth", c.center_depth}};
  if (c.object) {
    truth["object"] = {{"box", {c.object->x0, c.object->y0, c.object->x1, c.object->y1}},
                       {"depth", c.object->depth},
                       {"translation", vec_json(s.object_translation)},
                       {"velocity", vec_json(s.object_velocity)}};
  }
  write_text(dir / "truth.json", truth.dump(2) + "\n");
  return kOk;
}

}  // namespace evmotion::cli
