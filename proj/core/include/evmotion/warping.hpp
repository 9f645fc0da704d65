#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evmotion/events.hpp"
#include "evmotion/geometry.hpp"

namespace evmotion {

struct WarpDiagnostics {
  std::size_t events_in = 0;
  std::size_t events_out_of_bounds = 0;
  std::size_t events_without_flow = 0;  // source pixel has no valid flow
  double mean_displacement = 0.0;       // pixels, over events with flow

  WarpDiagnostics& operator+=(const WarpDiagnostics& other);
};

/// How warped (sub-pixel) events are accumulated into slice maps.
enum class Splat {
  kNearest,   // round to the nearest pixel; counts stay integral
  kBilinear,  // distribute each event over its four neighbouring pixels
};

struct LossWeights {
  double w_depth = 1.0;
  double w_mask = 1.0;
  double w_smooth_mask = 0.1;
  double w_smooth_depth = 0.1;
  double p = 0.5;  // quasi-norm exponent of the sharpness loss

  /// Throws InvalidArgument unless 0 < p < 1 and all weights are >= 0.
  void validate() const;
};

/// An event moved to a sub-pixel location at the reference time.
struct WarpedEvent {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
  int polarity = 1;
};

struct WarpedEvents {
  std::vector<WarpedEvent> events;  // in-bounds events only, time order kept
  double t_start = 0.0;
  double t_end = 0.0;
  SensorGeometry geometry;
  WarpDiagnostics diagnostics;
};

/// Moves each event to (x - u*(t - t_ref), y - v*(t - t_ref)) using the flow
/// at its source pixel. Events without flow, or whose nearest pixel falls off
/// the sensor, are dropped and counted.
WarpedEvents warp_events(const EventSlice& slice, const FlowField& flow, double t_ref);

struct WarpResult {
  EventSlice slice;
  WarpDiagnostics diagnostics;
};

/// warp_events followed by nearest-pixel rounding; timestamps are preserved.
WarpResult warp_slice(const EventSlice& slice, const FlowField& flow, double t_ref);

/// Projects warped events into a slice map with the requested splatting.
SliceMap project_warped(const WarpedEvents& warped, Splat splat);

/// Sum over neighbours, channels and pixels of |warped - middle|.
/// Requires 2 or 4 neighbours (K = 1 or 2) of the middle's geometry.
double coarse_loss(std::span<const SliceMap> warped_neighbors, const SliceMap& middle);

/// Sum over pixels of S^p where S is the pixel-wise sum of absolute channel
/// values over the stack. This is the p-th power of the quasi-norm of S.
double fine_loss(std::span<const SliceMap> warped_stack, double p);

/// Lower clamp applied to the ego weight inside the log of mask_loss.
inline constexpr double kMaskWeightFloor = 1e-8;

/// -sum over background pixels of log(m0) plus w_smooth * sum_j |grad m_j|_1
/// (forward differences). `gt_background` is non-zero on background pixels.
double mask_loss(const MixturePoseField& field, const Mask& gt_background, double w_smooth);

/// Mean over pixels valid in both maps of max(t/p, p/t) + |p - t|/t, plus
/// w_smooth * sum |d2 p/dx2| + |d2 p/dy2| over full valid stencils of `predict`.
/// Both maps must already share scale.
double depth_loss(const DepthMap& predict, const DepthMap& truth, double w_smooth);

}  // namespace evmotion
