#include "evmotion/events.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "evmotion/errors.hpp"

namespace evmotion {
namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Splits on blanks into at most N tokens; returns the count found (N + 1 if more).
template <std::size_t N>
std::size_t split_fields(std::string_view s, std::array<std::string_view, N>& out) {
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (n == N) return N + 1;
    out[n++] = s.substr(i, j - i);
    i = j;
  }
  return n;
}

template <typename T>
bool parse_number(std::string_view token, T& value) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

std::vector<Event> parse_events(std::istream& in, SensorGeometry geometry,
                                const LoadOptions& options, LoadStats* stats) {
  std::vector<Event> events;
  LoadStats local;
  std::string line;
  std::size_t line_no = 0;
  bool sorted = true;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;

    std::array<std::string_view, 4> fields;
    if (split_fields(body, fields) != 4) {
      throw ParseError("expected 4 fields `t x y p`", line_no);
    }
    Event e;
    int raw_polarity = 0;
    if (!parse_number(fields[0], e.t) || !std::isfinite(e.t) || e.t < 0.0) {
      throw ParseError("invalid timestamp '" + std::string(fields[0]) + "'", line_no);
    }
    if (!parse_number(fields[1], e.x) || !parse_number(fields[2], e.y)) {
      throw ParseError("invalid pixel coordinate", line_no);
    }
    if (!parse_number(fields[3], raw_polarity) || (raw_polarity != 0 && raw_polarity != 1)) {
      throw ParseError("polarity must be 0 or 1", line_no);
    }
    e.polarity = raw_polarity == 1 ? 1 : -1;
    if (!geometry.contains(e.x, e.y)) {
      throw EventBoundsError("pixel (" + std::to_string(e.x) + ", " + std::to_string(e.y) +
                                 ") outside " + std::to_string(geometry.width) + "x" +
                                 std::to_string(geometry.height) + " sensor",
                             line_no);
    }
    if (!events.empty() && e.t < events.back().t) {
      if (options.timestamps == TimestampPolicy::kReject) {
        throw EventOrderError("timestamp decreases", line_no);
      }
      sorted = false;
      ++local.out_of_order;
    }
    events.push_back(e);
  }
  if (in.bad()) throw IoError("read failure while parsing events");

  if (!sorted) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
  }
  local.lines = line_no;
  local.events = events.size();
  if (stats) *stats = local;
  return events;
}

std::vector<Event> load_events(const std::filesystem::path& path, SensorGeometry geometry,
                               const LoadOptions& options, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open event file " + path.string());
  return parse_events(in, geometry, options, stats);
}

void write_events(std::ostream& out, std::span<const Event> events) {
  std::array<char, 64> buf;
  for (const Event& e : events) {
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), e.t);
    if (ec != std::errc{}) throw IoError("timestamp formatting failed");
    out.write(buf.data(), ptr - buf.data());
    out << ' ' << e.x << ' ' << e.y << ' ' << (e.polarity > 0 ? 1 : 0) << '\n';
  }
}

void save_events(const std::filesystem::path& path, std::span<const Event> events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write event file " + path.string());
  write_events(out, events);
  if (!out) throw IoError("write failure on " + path.string());
}

EventSlice::EventSlice(std::vector<Event> events, double t_start, double t_end,
                       SensorGeometry geometry)
    : events_(std::move(events)), t_start_(t_start), t_end_(t_end), geometry_(geometry) {
  if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_end > t_start)) {
    throw InvalidArgument("slice window must satisfy t_end > t_start");
  }
  double previous = t_start;
  for (const Event& e : events_) {
    if (e.t < previous || e.t >= t_end) {
      throw InvalidArgument("slice events must be sorted and inside [t_start, t_end)");
    }
    if (!geometry.contains(e.x, e.y) || (e.polarity != 1 && e.polarity != -1)) {
      throw InvalidArgument("slice event outside sensor or with invalid polarity");
    }
    previous = e.t;
  }
}

std::vector<EventSlice> slice_stream(std::span<const Event> events, double delta_t,
                                     SensorGeometry geometry) {
  if (!(delta_t > 0.0)) throw InvalidArgument("delta_t must be positive");
  std::vector<EventSlice> slices;
  if (events.empty()) return slices;

  const double t0 = events.front().t;
  const auto edge = [&](std::size_t k) { return t0 + static_cast<double>(k) * delta_t; };

  std::size_t k = 0;
  std::vector<Event> bucket;
  for (const Event& e : events) {
    if (e.t < edge(k)) throw InvalidArgument("events must be sorted by timestamp");
    while (e.t >= edge(k + 1)) {
      slices.emplace_back(std::move(bucket), edge(k), edge(k + 1), geometry);
      bucket = {};
      ++k;
    }
    bucket.push_back(e);
  }
  slices.emplace_back(std::move(bucket), edge(k), edge(k + 1), geometry);
  return slices;
}

std::vector<EventSlice> subdivide(const EventSlice& slice, double fine_dt) {
  const double duration = slice.duration();
  if (!(fine_dt > 0.0) || fine_dt > duration * (1.0 + 1e-9)) {
    throw InvalidArgument("fine_dt must be in (0, slice duration]");
  }
  // 0.025 / 0.001 is 25.000000000000004 in binary; tolerate that excess.
  const auto count =
      static_cast<std::size_t>(std::max(1.0, std::ceil(duration / fine_dt - 1e-9)));

  const auto edge = [&](std::size_t k) {
    return k >= count ? slice.t_end() : slice.t_start() + static_cast<double>(k) * fine_dt;
  };

  std::vector<EventSlice> out;
  out.reserve(count);
  auto it = slice.events().begin();
  const auto end = slice.events().end();
  for (std::size_t k = 0; k < count; ++k) {
    const double hi = edge(k + 1);
    std::vector<Event> bucket;
    while (it != end && it->t < hi) bucket.push_back(*it++);
    out.emplace_back(std::move(bucket), edge(k), hi, slice.geometry());
  }
  return out;
}

SliceMap project_slice(const EventSlice& slice) {
  SliceMap map(slice.geometry());
  for (const Event& e : slice.events()) {
    const std::size_t i = slice.geometry().index(e.x, e.y);
    (e.polarity > 0 ? map.pos_count : map.neg_count)[i] += 1.0;
    map.time_agg[i] += slice.normalized_time(e.t);
  }
  for (std::size_t i = 0; i < map.time_agg.size(); ++i) {
    const double n = map.pos_count[i] + map.neg_count[i];
    if (n > 0.0) map.time_agg[i] /= n;
  }
  return map;
}

}  // namespace evmotion
