#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace evmotion::cli {

/// Bad or conflicting flags detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kBadInput = 2;  // usage, missing file, malformed file
inline constexpr int kBadData = 3;   // too few events, geometry mismatch, invalid values

struct Common {
  std::string intrinsics;  // empty: built-in defaults
  std::uint64_t seed = 0;
  std::string out;
};

struct WindowFlags {
  std::string events;
  double dt_ms = 25.0;
  double fine_dt_ms = 1.0;
  double p = 0.5;
  int K = 1;
  int start_slice = 0;
};

struct SliceArgs {
  Common common;
  std::string events;
  double dt_ms = 25.0;
};

struct CompensateArgs {
  Common common;
  WindowFlags window;
  std::string depth;
  double plane_depth = 0.0;
  std::string pose;
  std::string pose_json;
  std::string gt;
};

struct EstimateArgs {
  Common common;
  WindowFlags window;
  std::string depth;
  double plane_depth = 0.0;
  std::string mode = "6dof";
  int multistart = 5;
  int max_iters = 600;
  // object estimation only
  std::string mask;
  int object_id = -1;
  std::string ego;
  std::string ego_json;
};

struct GenGtArgs {
  Common common;
  std::string scene;
  double fps = 40.0;
  double velocity_dt_ms = 2.5;
};

struct EvalArgs {
  Common common;
  std::string pred;
  std::string gt;
  std::string alignment = "median";
  bool scale_from_gt = false;
  double threshold = 0.5;
  int object_id = -1;
};

struct SynthArgs {
  Common common;
  std::string kind = "plane";
  int texture_points = 0;  // 0: generator default
  int noise_events = 0;
};

int run_slice(const SliceArgs& a);
int run_compensate(const CompensateArgs& a);
int run_estimate_ego(const EstimateArgs& a);
int run_estimate_obj(const EstimateArgs& a);
int run_gen_gt(const GenGtArgs& a);
int run_eval_depth(const EvalArgs& a);
int run_eval_motion(const EvalArgs& a);
int run_eval_mask(const EvalArgs& a);
int run_synth(const SynthArgs& a);

}  // namespace evmotion::cli
