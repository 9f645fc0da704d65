#include "evmotion/compensator.hpp"

#include <cmath>

#include "evmotion/errors.hpp"

namespace evmotion {
namespace {

int nearest_pixel(double c) { return static_cast<int>(std::floor(c + 0.5)); }

std::size_t subslice_count(double duration, double fine_dt) {
  return static_cast<std::size_t>(std::max(1.0, std::ceil(duration / fine_dt - 1e-9)));
}

}  // namespace

void CompensationOptions::validate() const {
  if (!(fine_dt > 0.0)) throw InvalidArgument("fine_dt must be positive");
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("quasi-norm exponent p must be in (0, 1)");
  if (!(coarse_weight >= 0.0) || !(fine_weight >= 0.0) || !(out_of_bounds_penalty >= 0.0)) {
    throw InvalidArgument("loss weights must be >= 0");
  }
}

void MotionCompensator::Workspace::resize(std::size_t pixels, std::size_t events) {
  wx.assign(events, 0.0);
  wy.assign(events, 0.0);
  inside.assign(events, 0);
  for (auto* v : {&sub_weight, &sub_tsum, &stack, &mid_pos, &mid_neg, &mid_tsum, &nb_pos,
                  &nb_neg, &nb_tsum}) {
    v->assign(pixels, 0.0);
  }
  stack_mark.assign(pixels, 0);
  stamp.assign(pixels, 0);
  stamp_value = 0;
  for (auto* v : {&sub_touched, &stack_touched, &mid_touched, &nb_touched}) {
    v->clear();
    v->reserve(pixels / 4);
  }
}

MotionCompensator::MotionCompensator(std::span<const EventSlice> slices, const DepthMap& depth,
                                     const CameraIntrinsics& K, CompensationOptions options,
                                     const Mask* event_mask)
    : geometry_(depth.geometry()), options_(options) {
  options_.validate();
  K.validate();
  if (slices.empty() || slices.size() % 2 == 0) {
    throw InvalidArgument("motion compensation needs an odd number of slices");
  }
  if (options_.coarse_weight > 0.0 && slices.size() != 3 && slices.size() != 5) {
    throw InvalidArgument("coarse loss needs 3 or 5 slices (K = 1 or 2)");
  }
  if (!(K.geometry() == geometry_)) throw GeometryMismatch("intrinsics and depth differ");
  if (event_mask && !(event_mask->geometry() == geometry_)) {
    throw GeometryMismatch("event mask and depth differ");
  }
  for (std::size_t s = 0; s < slices.size(); ++s) {
    if (!(slices[s].geometry() == geometry_)) throw GeometryMismatch("slice and depth differ");
    if (s > 0 && slices[s].t_start() < slices[s - 1].t_end() - 1e-12) {
      throw InvalidArgument("slices must be time ordered and non-overlapping");
    }
  }

  middle_ = slices.size() / 2;
  t_ref_ = slices[middle_].center();

  std::uint32_t group_offset = 0;
  slice_begin_.push_back(0);
  for (std::size_t s = 0; s < slices.size(); ++s) {
    const EventSlice& slice = slices[s];
    const std::size_t count = subslice_count(slice.duration(), options_.fine_dt);
    const auto edge = [&](std::size_t k) {
      return k >= count ? slice.t_end()
                        : slice.t_start() + static_cast<double>(k) * options_.fine_dt;
    };
    for (const Event& e : slice.events()) {
      if (event_mask && !(*event_mask)(e.x, e.y)) continue;
      const std::size_t i = geometry_.index(e.x, e.y);
      if (!depth.valid(i)) {
        ++without_flow_;
        continue;
      }
      auto k = static_cast<std::size_t>(
          std::clamp((e.t - slice.t_start()) / options_.fine_dt, 0.0,
                     static_cast<double>(count - 1)));
      while (k > 0 && e.t < edge(k)) --k;
      while (k + 1 < count && e.t >= edge(k + 1)) ++k;

      Prepared p;
      const NormalizedPoint n = normalize_coords(e.x, e.y, K);
      p.A = flow_matrix(n.x, n.y, depth[i]);
      p.A.row(0) *= K.fx;
      p.A.row(1) *= K.fy;
      p.x = e.x;
      p.y = e.y;
      p.dt = e.t - t_ref_;
      p.tau_slice = slice.normalized_time(e.t);
      p.tau_sub = (e.t - edge(k)) / (edge(k + 1) - edge(k));
      p.group = group_offset + static_cast<std::uint32_t>(k);
      p.slice = static_cast<std::uint16_t>(s);
      p.polarity = static_cast<std::int8_t>(e.polarity);
      events_.push_back(p);
      if (s == middle_) ++middle_count_;
    }
    group_offset += static_cast<std::uint32_t>(count);
    slice_begin_.push_back(events_.size());
  }
}

MotionCompensator::Workspace MotionCompensator::make_workspace() const {
  Workspace ws;
  ws.resize(geometry_.pixels(), events_.size());
  return ws;
}

template <typename Fn>
void MotionCompensator::deposit(const Workspace& ws, std::size_t e, Fn&& fn) const {
  const double x = ws.wx[e];
  const double y = ws.wy[e];
  if (options_.splat == Splat::kNearest) {
    fn(static_cast<std::uint32_t>(geometry_.index(nearest_pixel(x), nearest_pixel(y))), 1.0);
    return;
  }
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  const auto put = [&](int px, int py, double w) {
    if (w > 0.0 && geometry_.contains(px, py)) {
      fn(static_cast<std::uint32_t>(geometry_.index(px, py)), w);
    }
  };
  put(x0, y0, (1.0 - ax) * (1.0 - ay));
  put(x0 + 1, y0, ax * (1.0 - ay));
  put(x0, y0 + 1, (1.0 - ax) * ay);
  put(x0 + 1, y0 + 1, ax * ay);
}

CompensationLosses MotionCompensator::evaluate(const Pose6& pose) const {
  Workspace ws = make_workspace();
  return evaluate(pose, ws);
}

CompensationLosses MotionCompensator::evaluate(const Pose6& pose, Workspace& ws) const {
  if (ws.wx.size() != events_.size() || ws.stack.size() != geometry_.pixels()) {
    ws.resize(geometry_.pixels(), events_.size());
  }
  const Eigen::Matrix<double, 6, 1> p = pose.vector();

  CompensationLosses out;
  WarpDiagnostics& diag = out.diagnostics;
  diag.events_in = events_.size() + without_flow_;
  diag.events_without_flow = without_flow_;

  double displacement_sum = 0.0;
  for (std::size_t e = 0; e < events_.size(); ++e) {
    const Prepared& ev = events_[e];
    const Eigen::Vector2d flow = ev.A * p;
    const double dx = flow.x() * ev.dt;
    const double dy = flow.y() * ev.dt;
    displacement_sum += std::hypot(dx, dy);
    ws.wx[e] = ev.x - dx;
    ws.wy[e] = ev.y - dy;
    const bool in = geometry_.contains(nearest_pixel(ws.wx[e]), nearest_pixel(ws.wy[e]));
    ws.inside[e] = in;
    if (!in) ++diag.events_out_of_bounds;
  }
  if (!events_.empty()) diag.mean_displacement = displacement_sum / events_.size();
  out.penalty = options_.out_of_bounds_penalty * static_cast<double>(diag.events_out_of_bounds);

  // Fine loss: flush each sub-slice into the stack as weight + mean time.
  if (options_.fine_weight > 0.0) {
    const auto flush = [&] {
      for (std::uint32_t i : ws.sub_touched) {
        const double w = ws.sub_weight[i];
        ws.stack[i] += w + ws.sub_tsum[i] / w;
        if (!ws.stack_mark[i]) {
          ws.stack_mark[i] = 1;
          ws.stack_touched.push_back(i);
        }
        ws.sub_weight[i] = 0.0;
        ws.sub_tsum[i] = 0.0;
      }
      ws.sub_touched.clear();
    };
    std::uint32_t group = events_.empty() ? 0 : events_.front().group;
    for (std::size_t e = 0; e < events_.size(); ++e) {
      if (events_[e].group != group) {
        flush();
        group = events_[e].group;
      }
      if (!ws.inside[e]) continue;
      const double tau = events_[e].tau_sub;
      deposit(ws, e, [&](std::uint32_t i, double w) {
        if (ws.sub_weight[i] == 0.0) ws.sub_touched.push_back(i);
        ws.sub_weight[i] += w;
        ws.sub_tsum[i] += w * tau;
      });
    }
    flush();

    double fine = 0.0;
    const bool square_root = options_.p == 0.5;
    for (std::uint32_t i : ws.stack_touched) {
      const double s = ws.stack[i];
      fine += square_root ? std::sqrt(s) : std::pow(s, options_.p);
      ws.stack[i] = 0.0;
      ws.stack_mark[i] = 0;
    }
    ws.stack_touched.clear();
    out.fine = fine;
  }

  // Coarse loss: every neighbour against the middle slice.
  if (options_.coarse_weight > 0.0) {
    const auto accumulate = [&](std::size_t s, std::vector<double>& pos, std::vector<double>& neg,
                                std::vector<double>& tsum, std::vector<std::uint32_t>& touched) {
      for (std::size_t e = slice_begin_[s]; e < slice_begin_[s + 1]; ++e) {
        if (!ws.inside[e]) continue;
        const bool positive = events_[e].polarity > 0;
        const double tau = events_[e].tau_slice;
        deposit(ws, e, [&](std::uint32_t i, double w) {
          if (pos[i] == 0.0 && neg[i] == 0.0) touched.push_back(i);
          (positive ? pos : neg)[i] += w;
          tsum[i] += w * tau;
        });
      }
      for (std::uint32_t i : touched) tsum[i] /= pos[i] + neg[i];  // now the time aggregate
    };

    accumulate(middle_, ws.mid_pos, ws.mid_neg, ws.mid_tsum, ws.mid_touched);
    double coarse = 0.0;
    for (std::size_t s = 0; s + 1 < slice_begin_.size(); ++s) {
      if (s == middle_) continue;
      accumulate(s, ws.nb_pos, ws.nb_neg, ws.nb_tsum, ws.nb_touched);
      if (++ws.stamp_value == 0) {
        std::fill(ws.stamp.begin(), ws.stamp.end(), 0u);
        ws.stamp_value = 1;
      }
      for (std::uint32_t i : ws.nb_touched) {
        coarse += std::abs(ws.nb_pos[i] - ws.mid_pos[i]) + std::abs(ws.nb_neg[i] - ws.mid_neg[i]) +
                  std::abs(ws.nb_tsum[i] - ws.mid_tsum[i]);
        ws.stamp[i] = ws.stamp_value;
        ws.nb_pos[i] = ws.nb_neg[i] = ws.nb_tsum[i] = 0.0;
      }
      for (std::uint32_t i : ws.mid_touched) {
        if (ws.stamp[i] != ws.stamp_value) coarse += ws.mid_pos[i] + ws.mid_neg[i] + ws.mid_tsum[i];
      }
      ws.nb_touched.clear();
    }
    for (std::uint32_t i : ws.mid_touched) ws.mid_pos[i] = ws.mid_neg[i] = ws.mid_tsum[i] = 0.0;
    ws.mid_touched.clear();
    out.coarse = coarse;
  }

  out.total = options_.coarse_weight * out.coarse + options_.fine_weight * out.fine + out.penalty;
  return out;
}

}  // namespace evmotion
