#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "evmotion/errors.hpp"

using namespace evmotion::cli;

namespace {

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--intrinsics", c.intrinsics, "file with `fx fy cx cy width height`");
  cmd->add_option("--seed", c.seed, "seed for all randomness")->capture_default_str();
  if (with_out) cmd->add_option("--out", c.out, "output directory or file");
}

void add_window(CLI::App* cmd, WindowFlags& w) {
  cmd->add_option("--events", w.events, "event text file")->required();
  cmd->add_option("--dt-ms", w.dt_ms, "slice duration")->capture_default_str();
  cmd->add_option("--fine-dt-ms", w.fine_dt_ms, "sub-slice duration")->capture_default_str();
  cmd->add_option("--p", w.p, "quasi-norm exponent")->capture_default_str();
  cmd->add_option("--K", w.K, "neighbour slices on each side (1 or 2)")
      ->check(CLI::Range(1, 2))
      ->capture_default_str();
  cmd->add_option("--start-slice", w.start_slice, "index of the first slice of the window")
      ->capture_default_str();
}

void add_depth(CLI::App* cmd, std::string& depth, double& plane) {
  auto* d = cmd->add_option("--depth", depth, "depth map (PFM, 0 = invalid)");
  auto* p = cmd->add_option("--plane-depth", plane, "use a fronto-parallel plane at this depth");
  d->excludes(p);
  p->excludes(d);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-camera slicing, motion compensation, estimation and evaluation"};
  app.require_subcommand(1);

  SliceArgs slice;
  auto* c_slice = app.add_subcommand("slice", "cut events into slices and render count maps");
  add_common(c_slice, slice.common);
  c_slice->add_option("--events", slice.events, "event text file")->required();
  c_slice->add_option("--dt-ms", slice.dt_ms, "slice duration")->capture_default_str();

  CompensateArgs comp;
  auto* c_comp = app.add_subcommand("compensate", "warp a slice window and report losses");
  add_common(c_comp, comp.common);
  add_window(c_comp, comp.window);
  add_depth(c_comp, comp.depth, comp.plane_depth);
  c_comp->add_option("--pose", comp.pose, "vx,vy,vz,wx,wy,wz");
  c_comp->add_option("--pose-json", comp.pose_json, "JSON file with a \"pose\" object");
  c_comp->add_option("--gt", comp.gt, "ground-truth frame directory (pose and depth)");

  EstimateArgs ego;
  auto* c_ego = app.add_subcommand("estimate-ego", "estimate camera velocity");
  add_common(c_ego, ego.common);
  add_window(c_ego, ego.window);
  add_depth(c_ego, ego.depth, ego.plane_depth);
  c_ego->add_option("--mode", ego.mode, "6dof or 4dof")->capture_default_str();
  c_ego->add_option("--multistart", ego.multistart, "simplex starts")->capture_default_str();
  c_ego->add_option("--max-iters", ego.max_iters, "iterations per start")->capture_default_str();

  EstimateArgs obj;
  auto* c_obj = app.add_subcommand("estimate-obj", "estimate an object's velocity");
  add_common(c_obj, obj.common);
  add_window(c_obj, obj.window);
  add_depth(c_obj, obj.depth, obj.plane_depth);
  c_obj->add_option("--multistart", obj.multistart, "simplex starts")->capture_default_str();
  c_obj->add_option("--max-iters", obj.max_iters, "iterations per start")->capture_default_str();
  c_obj->add_option("--mask", obj.mask, "object mask (PGM)")->required();
  c_obj->add_option("--object-id", obj.object_id,
                    "mask value of the object; default: any value but 0 and 255");
  auto* o_ego = c_obj->add_option("--ego", obj.ego, "camera pose vx,vy,vz,wx,wy,wz");
  auto* o_ego_json = c_obj->add_option("--ego-json", obj.ego_json, "JSON with a \"pose\" object");
  o_ego->excludes(o_ego_json);
  o_ego_json->excludes(o_ego);

  GenGtArgs gen;
  auto* c_gen = app.add_subcommand("gen-gt", "render depth, masks and velocities from a scene");
  add_common(c_gen, gen.common);
  c_gen->add_option("--scene", gen.scene, "scene manifest (JSON)")->required();
  c_gen->add_option("--fps", gen.fps, "frame rate")->capture_default_str();
  c_gen->add_option("--velocity-dt-ms", gen.velocity_dt_ms, "half width of the velocity window")
      ->capture_default_str();

  EvalArgs ed, em, ek;
  auto* c_ed = app.add_subcommand("eval-depth", "depth metrics over a frame sequence");
  auto* c_em = app.add_subcommand("eval-motion", "velocity metrics over a frame sequence");
  auto* c_ek = app.add_subcommand("eval-mask", "IoU of predicted object masks");
  for (auto [cmd, args] : {std::pair{c_ed, &ed}, {c_em, &em}, {c_ek, &ek}}) {
    add_common(cmd, args->common);
    cmd->add_option("--pred", args->pred, "prediction directory")->required();
    cmd->add_option("--gt", args->gt, "ground-truth frame directory")->required();
  }
  c_ed->add_option("--alignment", ed.alignment, "median, mean or none")->capture_default_str();
  c_em->add_flag("--scale-from-gt", em.scale_from_gt, "least-squares scale on translations");
  c_ek->add_option("--threshold", ek.threshold, "weight threshold")->capture_default_str();
  c_ek->add_option("--object-id", ek.object_id,
                   "ground-truth id of the object; default: every id but 0 and 255");

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "write a synthetic scene");
  add_common(c_syn, syn.common);
  c_syn->add_option("--kind", syn.kind, "plane, object or room")->capture_default_str();
  c_syn->add_option("--texture-points", syn.texture_points, "background texture points");
  c_syn->add_option("--noise-events", syn.noise_events, "uniform noise events");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*c_slice) return run_slice(slice);
    if (*c_comp) return run_compensate(comp);
    if (*c_ego) return run_estimate_ego(ego);
    if (*c_obj) return run_estimate_obj(obj);
    if (*c_gen) return run_gen_gt(gen);
    if (*c_ed) return run_eval_depth(ed);
    if (*c_em) return run_eval_motion(em);
    if (*c_ek) return run_eval_mask(ek);
    if (*c_syn) return run_synth(syn);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kBadInput;
  } catch (const evmotion::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const evmotion::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const evmotion::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
