#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "evmotion/events.hpp"
#include "evmotion/geometry.hpp"
#include "evmotion/warping.hpp"

namespace evmotion {

struct CompensationOptions {
  double fine_dt = 1e-3;
  double p = 0.5;
  Splat splat = Splat::kNearest;
  double coarse_weight = 1.0;
  double fine_weight = 1.0;
  /// Added to the total once per event warped off the sensor.
  double out_of_bounds_penalty = 0.0;

  void validate() const;
};

struct CompensationLosses {
  double coarse = 0.0;
  double fine = 0.0;
  double penalty = 0.0;
  double total = 0.0;  // coarse_weight * coarse + fine_weight * fine + penalty
  WarpDiagnostics diagnostics;
};

/// Evaluates the coarse and fine warping losses of a slice window for many
/// candidate poses. Per-event flow matrices are computed once, so each
/// evaluation costs O(events) rather than O(pixels * sub-slices).
///
/// Slices are warped to the centre of the middle slice. The coarse loss
/// compares each warped neighbour against the warped middle slice; the fine
/// loss stacks every warped `fine_dt` sub-slice of every slice. Results match
/// project_warped + coarse_loss / fine_loss up to summation order.
class MotionCompensator {
 public:
  /// Scratch buffers for one evaluation thread.
  class Workspace {
   public:
    Workspace() = default;

   private:
    friend class MotionCompensator;
    void resize(std::size_t pixels, std::size_t events);

    std::vector<double> wx, wy;
    std::vector<unsigned char> inside;

    std::vector<double> sub_weight, sub_tsum;
    std::vector<std::uint32_t> sub_touched;
    std::vector<double> stack;
    std::vector<unsigned char> stack_mark;
    std::vector<std::uint32_t> stack_touched;

    std::vector<double> mid_pos, mid_neg, mid_tsum;
    std::vector<std::uint32_t> mid_touched;
    std::vector<double> nb_pos, nb_neg, nb_tsum;
    std::vector<std::uint32_t> nb_touched;
    std::vector<std::uint32_t> stamp;
    std::uint32_t stamp_value = 0;
  };

  /// `slices` must be an odd number of time-ordered slices sharing the depth
  /// geometry; 3 or 5 when coarse_weight > 0. Only events whose source pixel
  /// is non-zero in `event_mask` (if given) and has valid depth take part.
  MotionCompensator(std::span<const EventSlice> slices, const DepthMap& depth,
                    const CameraIntrinsics& K, CompensationOptions options,
                    const Mask* event_mask = nullptr);

  CompensationLosses evaluate(const Pose6& pose) const;
  CompensationLosses evaluate(const Pose6& pose, Workspace& workspace) const;

  Workspace make_workspace() const;

  std::size_t event_count() const { return events_.size(); }
  std::size_t events_without_flow() const { return without_flow_; }
  std::size_t events_in_middle() const { return middle_count_; }
  double t_ref() const { return t_ref_; }
  const CompensationOptions& options() const { return options_; }

 private:
  struct Prepared {
    Eigen::Matrix<double, 2, 6> A;  // pixel units
    double x = 0.0;
    double y = 0.0;
    double dt = 0.0;        // t - t_ref
    double tau_slice = 0.0;
    double tau_sub = 0.0;
    std::uint32_t group = 0;  // global sub-slice index
    std::uint16_t slice = 0;
    std::int8_t polarity = 1;
  };

  template <typename Fn>
  void deposit(const Workspace& ws, std::size_t e, Fn&& fn) const;

  SensorGeometry geometry_;
  CompensationOptions options_;
  std::vector<Prepared> events_;
  std::vector<std::size_t> slice_begin_;  // event range per slice, size slices + 1
  std::size_t middle_ = 0;
  std::size_t middle_count_ = 0;
  std::size_t without_flow_ = 0;
  double t_ref_ = 0.0;
};

}  // namespace evmotion
