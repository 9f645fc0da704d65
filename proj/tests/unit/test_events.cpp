#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "evmotion/errors.hpp"
#include "evmotion/events.hpp"

namespace ev = evmotion;

namespace {

const ev::SensorGeometry kSensor{346, 260};

std::vector<ev::Event> parse(const std::string& text, ev::LoadOptions opts = {},
                             ev::LoadStats* stats = nullptr) {
  std::istringstream in(text);
  return ev::parse_events(in, kSensor, opts, stats);
}

std::vector<ev::Event> random_events(std::size_t n, double t0, double t1, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> t(t0, t1);
  std::uniform_int_distribution<int> x(0, kSensor.width - 1), y(0, kSensor.height - 1), p(0, 1);
  std::vector<ev::Event> out(n);
  for (auto& e : out) e = {t(rng), x(rng), y(rng), p(rng) ? 1 : -1};
  std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.t < b.t; });
  return out;
}

}  // namespace

TEST(ParseEvents, TwoLinesMapPolarity) {
  auto e = parse("0.000001 10 20 1\n0.000002 11 20 0\n");
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0], (ev::Event{0.000001, 10, 20, 1}));
  EXPECT_EQ(e[1], (ev::Event{0.000002, 11, 20, -1}));
}

TEST(ParseEvents, EmptyInput) {
  EXPECT_TRUE(parse("").empty());
  EXPECT_TRUE(parse("# only a comment\n\n").empty());
}

TEST(ParseEvents, OutOfBoundsCoordinate) {
  try {
    parse("0.5 500 20 1\n");
    FAIL() << "expected EventBoundsError";
  } catch (const ev::EventBoundsError& err) {
    EXPECT_EQ(err.line(), 1u);
  }
}

TEST(ParseEvents, MalformedLines) {
  EXPECT_THROW(parse("0.1 1 2\n"), ev::ParseError);
  EXPECT_THROW(parse("0.1 1 2 3 4\n"), ev::ParseError);
  EXPECT_THROW(parse("abc 1 2 1\n"), ev::ParseError);
  EXPECT_THROW(parse("0.1 1 2 2\n"), ev::ParseError);
  EXPECT_THROW(parse("-0.1 1 2 1\n"), ev::ParseError);
}

TEST(ParseEvents, OutOfOrderStableSortedAndCounted) {
  ev::LoadStats stats;
  auto e = parse("0.3 1 1 1\n0.1 2 2 1\n0.1 3 3 0\n", {}, &stats);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(stats.out_of_order, 1u);
  EXPECT_EQ(e[0].x, 2);
  EXPECT_EQ(e[1].x, 3);  // equal timestamps keep file order
  EXPECT_EQ(e[2].x, 1);
}

TEST(ParseEvents, RejectPolicyThrows) {
  ev::LoadOptions opts;
  opts.timestamps = ev::TimestampPolicy::kReject;
  EXPECT_THROW(parse("0.3 1 1 1\n0.1 2 2 1\n", opts), ev::EventOrderError);
}

TEST(ParseEvents, WriteParseRoundTrip) {
  auto events = random_events(500, 0.0, 0.2, 3);
  std::ostringstream out;
  ev::write_events(out, events);
  EXPECT_EQ(parse(out.str()), events);
}

TEST(SliceStream, HundredMillisecondsGivesFourSlices) {
  std::vector<ev::Event> e;
  for (int i = 0; i < 1000; ++i) e.push_back({(i + 0.5) * 1e-4, 5, 5, 1});  // last at 99.95 ms
  auto slices = ev::slice_stream(e, 0.025, kSensor);
  ASSERT_EQ(slices.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(slices[k].t_start(), e.front().t + 0.025 * k);  // windows start at the first event
    EXPECT_EQ(slices[k].size(), 250u);
  }
}

TEST(SliceStream, EmptyStream) {
  EXPECT_TRUE(ev::slice_stream({}, 0.025, kSensor).empty());
}

TEST(SliceStream, BoundaryEventGoesToLaterSlice) {
  std::vector<ev::Event> e{{0.0, 1, 1, 1}, {0.025, 2, 2, 1}};
  auto slices = ev::slice_stream(e, 0.025, kSensor);
  ASSERT_EQ(slices.size(), 2u);
  EXPECT_EQ(slices[0].size(), 1u);
  ASSERT_EQ(slices[1].size(), 1u);
  EXPECT_EQ(slices[1].events()[0].x, 2);
}

TEST(SliceStream, GapsKeepEmptySlices) {
  std::vector<ev::Event> e{{0.0, 1, 1, 1}, {0.080, 2, 2, 1}};
  auto slices = ev::slice_stream(e, 0.025, kSensor);
  ASSERT_EQ(slices.size(), 4u);
  EXPECT_TRUE(slices[1].empty());
  EXPECT_TRUE(slices[2].empty());
}

TEST(SliceStream, PartitionPreservesEveryEvent) {
  auto events = random_events(4000, 0.0, 0.37, 11);
  auto slices = ev::slice_stream(events, 0.025, kSensor);
  std::vector<ev::Event> joined;
  for (auto& s : slices) {
    for (auto& e : s.events()) {
      EXPECT_GE(e.t, s.t_start());
      EXPECT_LT(e.t, s.t_end());
      joined.push_back(e);
    }
  }
  EXPECT_EQ(joined, events);
}

TEST(Subdivide, TwentyFiveMillisecondsIntoOne) {
  ev::EventSlice s({}, 0.0, 0.025, kSensor);
  auto subs = ev::subdivide(s, 0.001);
  ASSERT_EQ(subs.size(), 25u);
  EXPECT_DOUBLE_EQ(subs.back().t_end(), 0.025);
  for (std::size_t k = 1; k < subs.size(); ++k) {
    EXPECT_EQ(subs[k].t_start(), subs[k - 1].t_end());
  }
}

TEST(Subdivide, FullDurationIsIdentity) {
  ev::EventSlice s({{0.001, 3, 4, 1}, {0.02, 5, 6, -1}}, 0.0, 0.025, kSensor);
  auto subs = ev::subdivide(s, 0.025);
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].t_start(), s.t_start());
  EXPECT_EQ(subs[0].t_end(), s.t_end());
  ASSERT_EQ(subs[0].size(), 2u);
  EXPECT_EQ(subs[0].events()[1], s.events()[1]);
}

TEST(Subdivide, AllEventsInFirstMillisecond) {
  std::vector<ev::Event> e;
  for (int i = 0; i < 30; ++i) e.push_back({i * 3e-5, i % 10, 1, 1});
  ev::EventSlice s(e, 0.0, 0.025, kSensor);
  auto subs = ev::subdivide(s, 0.001);
  ASSERT_EQ(subs.size(), 25u);
  EXPECT_EQ(subs[0].size(), 30u);
  int empty = 0;
  for (auto& sub : subs) empty += sub.empty();
  EXPECT_EQ(empty, 24);
}

TEST(Subdivide, RejectsBadStep) {
  ev::EventSlice s({}, 0.0, 0.025, kSensor);
  EXPECT_THROW(ev::subdivide(s, 0.0), ev::InvalidArgument);
  EXPECT_THROW(ev::subdivide(s, 0.03), ev::InvalidArgument);
}

TEST(ProjectSlice, SingleEventAtMidpoint) {
  ev::EventSlice s({{0.0125, 5, 5, 1}}, 0.0, 0.025, kSensor);
  auto m = ev::project_slice(s);
  EXPECT_EQ(m.pos_count(5, 5), 1.0);
  EXPECT_EQ(m.neg_count(5, 5), 0.0);
  EXPECT_DOUBLE_EQ(m.time_agg(5, 5), 0.5);
}

TEST(ProjectSlice, EmptySliceAllZero) {
  ev::EventSlice s({}, 0.0, 0.025, kSensor);
  auto m = ev::project_slice(s);
  for (std::size_t i = 0; i < m.pos_count.size(); ++i) {
    ASSERT_EQ(m.pos_count[i] + m.neg_count[i] + m.time_agg[i], 0.0);
  }
}

TEST(ProjectSlice, TimeAggregateIsMean) {
  ev::EventSlice s({{0.2, 7, 8, 1}, {0.8, 7, 8, -1}}, 0.0, 1.0, kSensor);
  auto m = ev::project_slice(s);
  EXPECT_EQ(m.pos_count(7, 8) + m.neg_count(7, 8), 2.0);
  EXPECT_DOUBLE_EQ(m.time_agg(7, 8), 0.5);
}

// Counts of a union of disjoint time ranges equal the sum of the parts.
TEST(ProjectSlice, CountsAdditiveOverSubslices) {
  auto events = random_events(3000, 0.0, 0.025, 5);
  ev::EventSlice s(events, 0.0, 0.025, kSensor);
  auto whole = ev::project_slice(s);
  ev::Image<double> pos(kSensor), neg(kSensor);
  for (auto& sub : ev::subdivide(s, 0.001)) {
    auto m = ev::project_slice(sub);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      pos[i] += m.pos_count[i];
      neg[i] += m.neg_count[i];
    }
  }
  EXPECT_EQ(pos, whole.pos_count);
  EXPECT_EQ(neg, whole.neg_count);
}

TEST(ProjectSlice, TimeAggregateInUnitInterval) {
  auto events = random_events(5000, 0.1, 0.125, 9);
  ev::EventSlice s(events, 0.1, 0.125, kSensor);
  auto m = ev::project_slice(s);
  for (std::size_t i = 0; i < m.time_agg.size(); ++i) {
    ASSERT_GE(m.time_agg[i], 0.0);
    ASSERT_LT(m.time_agg[i], 1.0);
  }
}

TEST(EventSlice, RejectsInvalidContents) {
  EXPECT_THROW(ev::EventSlice({}, 0.1, 0.1, kSensor), ev::InvalidArgument);
  EXPECT_THROW(ev::EventSlice({{0.2, 1, 1, 1}}, 0.0, 0.1, kSensor), ev::InvalidArgument);
  EXPECT_THROW(ev::EventSlice({{0.05, 1, 1, 1}, {0.01, 1, 1, 1}}, 0.0, 0.1, kSensor),
               ev::InvalidArgument);
}
