#include "evmotion/warping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evmotion/errors.hpp"

namespace evmotion {
namespace {

int nearest_pixel(double c) { return static_cast<int>(std::floor(c + 0.5)); }

void require_same_geometry(const SliceMap& a, const SliceMap& b) {
  if (!(a.geometry() == b.geometry())) throw GeometryMismatch("slice maps differ in geometry");
}

}  // namespace

WarpDiagnostics& WarpDiagnostics::operator+=(const WarpDiagnostics& other) {
  const std::size_t with_flow = events_in - events_without_flow;
  const std::size_t other_with_flow = other.events_in - other.events_without_flow;
  const std::size_t total = with_flow + other_with_flow;
  if (total > 0) {
    mean_displacement = (mean_displacement * static_cast<double>(with_flow) +
                         other.mean_displacement * static_cast<double>(other_with_flow)) /
                        static_cast<double>(total);
  }
  events_in += other.events_in;
  events_out_of_bounds += other.events_out_of_bounds;
  events_without_flow += other.events_without_flow;
  return *this;
}

void LossWeights::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("quasi-norm exponent p must be in (0, 1)");
  for (double w : {w_depth, w_mask, w_smooth_mask, w_smooth_depth}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("loss weights must be >= 0");
  }
}

WarpedEvents warp_events(const EventSlice& slice, const FlowField& flow, double t_ref) {
  const SensorGeometry g = slice.geometry();
  if (!(flow.geometry() == g)) throw GeometryMismatch("flow field and slice differ in geometry");

  WarpedEvents out;
  out.t_start = slice.t_start();
  out.t_end = slice.t_end();
  out.geometry = g;
  out.events.reserve(slice.size());

  WarpDiagnostics& d = out.diagnostics;
  double displacement_sum = 0.0;
  for (const Event& e : slice.events()) {
    ++d.events_in;
    const std::size_t i = g.index(e.x, e.y);
    if (!flow.valid[i]) {
      ++d.events_without_flow;
      continue;
    }
    const double dt = e.t - t_ref;
    const double dx = flow.u[i] * dt;
    const double dy = flow.v[i] * dt;
    displacement_sum += std::hypot(dx, dy);
    const WarpedEvent w{e.x - dx, e.y - dy, e.t, e.polarity};
    if (!g.contains(nearest_pixel(w.x), nearest_pixel(w.y))) {
      ++d.events_out_of_bounds;
      continue;
    }
    out.events.push_back(w);
  }
  const std::size_t with_flow = d.events_in - d.events_without_flow;
  if (with_flow > 0) d.mean_displacement = displacement_sum / static_cast<double>(with_flow);
  return out;
}

WarpResult warp_slice(const EventSlice& slice, const FlowField& flow, double t_ref) {
  WarpedEvents warped = warp_events(slice, flow, t_ref);
  std::vector<Event> events;
  events.reserve(warped.events.size());
  for (const WarpedEvent& w : warped.events) {
    events.push_back({w.t, nearest_pixel(w.x), nearest_pixel(w.y), w.polarity});
  }
  return {EventSlice(std::move(events), slice.t_start(), slice.t_end(), slice.geometry()),
          warped.diagnostics};
}

SliceMap project_warped(const WarpedEvents& warped, Splat splat) {
  const SensorGeometry g = warped.geometry;
  SliceMap map(g);
  const double span = warped.t_end - warped.t_start;
  // time_agg accumulates weight * tau here and is divided by total weight below.
  const auto deposit = [&](int x, int y, double w, const WarpedEvent& e, double tau) {
    if (w <= 0.0 || !g.contains(x, y)) return;
    const std::size_t i = g.index(x, y);
    (e.polarity > 0 ? map.pos_count : map.neg_count)[i] += w;
    map.time_agg[i] += w * tau;
  };
  for (const WarpedEvent& e : warped.events) {
    const double tau = (e.t - warped.t_start) / span;
    if (splat == Splat::kNearest) {
      deposit(nearest_pixel(e.x), nearest_pixel(e.y), 1.0, e, tau);
    } else {
      const double fx = std::floor(e.x);
      const double fy = std::floor(e.y);
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      const double ax = e.x - fx;
      const double ay = e.y - fy;
      deposit(x0, y0, (1.0 - ax) * (1.0 - ay), e, tau);
      deposit(x0 + 1, y0, ax * (1.0 - ay), e, tau);
      deposit(x0, y0 + 1, (1.0 - ax) * ay, e, tau);
      deposit(x0 + 1, y0 + 1, ax * ay, e, tau);
    }
  }
  for (std::size_t i = 0; i < map.time_agg.size(); ++i) {
    const double n = map.pos_count[i] + map.neg_count[i];
    if (n > 0.0) map.time_agg[i] /= n;
  }
  return map;
}

double coarse_loss(std::span<const SliceMap> warped_neighbors, const SliceMap& middle) {
  if (warped_neighbors.size() != 2 && warped_neighbors.size() != 4) {
    throw InvalidArgument("coarse loss needs 2 or 4 neighbouring slices (K = 1 or 2), got " +
                          std::to_string(warped_neighbors.size()));
  }
  double total = 0.0;
  for (const SliceMap& n : warped_neighbors) {
    require_same_geometry(n, middle);
    for (std::size_t i = 0; i < middle.pos_count.size(); ++i) {
      total += std::abs(n.pos_count[i] - middle.pos_count[i]) +
               std::abs(n.neg_count[i] - middle.neg_count[i]) +
               std::abs(n.time_agg[i] - middle.time_agg[i]);
    }
  }
  return total;
}

double fine_loss(std::span<const SliceMap> warped_stack, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("quasi-norm exponent p must be in (0, 1)");
  if (warped_stack.empty()) throw InvalidArgument("fine loss needs at least one slice");
  const SliceMap& first = warped_stack.front();
  Image<double> stacked(first.geometry(), 0.0);
  for (const SliceMap& m : warped_stack) {
    require_same_geometry(m, first);
    for (std::size_t i = 0; i < stacked.size(); ++i) {
      stacked[i] += std::abs(m.pos_count[i]) + std::abs(m.neg_count[i]) + std::abs(m.time_agg[i]);
    }
  }
  double total = 0.0;
  for (double s : stacked.data()) {
    if (s > 0.0) total += std::pow(s, p);
  }
  return total;
}

double mask_loss(const MixturePoseField& field, const Mask& gt_background, double w_smooth) {
  const SensorGeometry g = field.geometry();
  if (!(gt_background.geometry() == g)) throw GeometryMismatch("mask and weights differ");
  if (!(w_smooth >= 0.0)) throw InvalidArgument("smoothness weight must be >= 0");

  double bce = 0.0;
  for (std::size_t i = 0; i < g.pixels(); ++i) {
    if (!gt_background[i]) continue;
    const double m0 = std::clamp(field.weight(i, 0), kMaskWeightFloor, 1.0);
    bce -= std::log(m0);
  }

  double smooth = 0.0;
  if (w_smooth > 0.0) {
    for (std::size_t j = 0; j < field.components(); ++j) {
      for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
          const double m = field.weight(g.index(x, y), j);
          if (x + 1 < g.width) smooth += std::abs(field.weight(g.index(x + 1, y), j) - m);
          if (y + 1 < g.height) smooth += std::abs(field.weight(g.index(x, y + 1), j) - m);
        }
      }
    }
  }
  return bce + w_smooth * smooth;
}

double depth_loss(const DepthMap& predict, const DepthMap& truth, double w_smooth) {
  const SensorGeometry g = predict.geometry();
  if (!(truth.geometry() == g)) throw GeometryMismatch("depth maps differ in geometry");
  if (!(w_smooth >= 0.0)) throw InvalidArgument("smoothness weight must be >= 0");

  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.pixels(); ++i) {
    if (!predict.valid(i) || !truth.valid(i)) continue;
    const double p = predict[i];
    const double t = truth[i];
    sum += std::max(t / p, p / t) + std::abs(p - t) / t;
    ++n;
  }
  if (n == 0) throw InsufficientData("depth maps share no valid pixels");

  double smooth = 0.0;
  if (w_smooth > 0.0) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        if (!predict.valid(x, y)) continue;
        const double c = predict(x, y);
        if (x > 0 && x + 1 < g.width && predict.valid(x - 1, y) && predict.valid(x + 1, y)) {
          smooth += std::abs(predict(x - 1, y) - 2.0 * c + predict(x + 1, y));
        }
        if (y > 0 && y + 1 < g.height && predict.valid(x, y - 1) && predict.valid(x, y + 1)) {
          smooth += std::abs(predict(x, y - 1) - 2.0 * c + predict(x, y + 1));
        }
      }
    }
  }
  return sum / static_cast<double>(n) + w_smooth * smooth;
}

}  // namespace evmotion
