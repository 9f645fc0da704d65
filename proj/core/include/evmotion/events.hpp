#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "evmotion/image.hpp"

namespace evmotion {

/// A single polarity change report. `t` in seconds, `polarity` is -1 or +1.
struct Event {
  double t = 0.0;
  int x = 0;
  int y = 0;
  int polarity = 1;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class TimestampPolicy {
  kStableSort,  // reorder out-of-order lines, count them in LoadStats
  kReject,      // throw EventOrderError on the first decreasing timestamp
};

struct LoadOptions {
  TimestampPolicy timestamps = TimestampPolicy::kStableSort;
};

struct LoadStats {
  std::size_t lines = 0;
  std::size_t events = 0;
  std::size_t out_of_order = 0;
};

/// Reads the text event format: `t x y p` per line, p in {0, 1}, `#` comments.
std::vector<Event> parse_events(std::istream& in, SensorGeometry geometry,
                                const LoadOptions& options = {},
                                LoadStats* stats = nullptr);
std::vector<Event> load_events(const std::filesystem::path& path, SensorGeometry geometry,
                               const LoadOptions& options = {},
                               LoadStats* stats = nullptr);

/// Writes events in the text format with shortest round-trip timestamps.
void write_events(std::ostream& out, std::span<const Event> events);
void save_events(const std::filesystem::path& path, std::span<const Event> events);

/// Time-sorted events inside the half-open window [t_start, t_end).
class EventSlice {
 public:
  /// Throws InvalidArgument if any invariant is violated.
  EventSlice(std::vector<Event> events, double t_start, double t_end, SensorGeometry geometry);

  std::span<const Event> events() const { return events_; }
  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  double duration() const { return t_end_ - t_start_; }
  double center() const { return 0.5 * (t_start_ + t_end_); }
  SensorGeometry geometry() const { return geometry_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  /// Window position of `t` in [0, 1).
  double normalized_time(double t) const { return (t - t_start_) / (t_end_ - t_start_); }

 private:
  std::vector<Event> events_;
  double t_start_;
  double t_end_;
  SensorGeometry geometry_;
};

/// Consecutive windows [t0 + k*dt, t0 + (k+1)*dt) from the first event time t0.
/// Events on a window edge belong to the later window. Intermediate empty
/// windows are kept so slice k always starts at t0 + k*dt.
std::vector<EventSlice> slice_stream(std::span<const Event> events, double delta_t,
                                     SensorGeometry geometry);

/// Tiles a slice into sub-slices of length `fine_dt`; the last one ends at t_end.
std::vector<EventSlice> subdivide(const EventSlice& slice, double fine_dt);

/// Three-channel projection of a slice. Count channels hold integral values
/// for nearest-pixel accumulation and fractional ones for bilinear splatting.
struct SliceMap {
  SliceMap() = default;
  explicit SliceMap(SensorGeometry geometry)
      : pos_count(geometry), neg_count(geometry), time_agg(geometry) {}

  SensorGeometry geometry() const { return pos_count.geometry(); }

  Image<double> pos_count;
  Image<double> neg_count;
  Image<double> time_agg;  // mean normalized timestamp, 0 where no events
};

SliceMap project_slice(const EventSlice& slice);

}  // namespace evmotion
