#include <benchmark/benchmark.h>

#include "evmotion/compensator.hpp"
#include "evmotion/estimation.hpp"
#include "evmotion/groundtruth.hpp"
#include "evmotion/synth.hpp"

namespace ev = evmotion;

namespace {

const ev::SynthScene& plane_scene() {
  static const ev::SynthScene scene = ev::make_synthetic_scene(ev::random_rigid_config(0));
  return scene;
}

const ev::Scene& room_scene() {
  static const ev::Scene scene = ev::make_room_scene(ev::RoomConfig{});
  return scene;
}

}  // namespace

static void BM_CompensatorEvaluate(benchmark::State& state) {
  const auto& sc = plane_scene();
  ev::CompensationOptions o;
  o.splat = static_cast<ev::Splat>(state.range(0));
  ev::MotionCompensator comp(sc.slices, sc.depth, sc.K, o);
  auto ws = comp.make_workspace();
  for (auto _ : state) {
    benchmark::DoNotOptimize(comp.evaluate(sc.ego, ws));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(comp.event_count()));
}
BENCHMARK(BM_CompensatorEvaluate)
    ->Arg(static_cast<int>(ev::Splat::kNearest))
    ->Arg(static_cast<int>(ev::Splat::kBilinear))
    ->Unit(benchmark::kMicrosecond);

static void BM_FlowField(benchmark::State& state) {
  const auto& sc = plane_scene();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ev::flow_field(sc.depth, sc.ego, sc.K));
  }
}
BENCHMARK(BM_FlowField)->Unit(benchmark::kMicrosecond);

static void BM_ProjectCloud(benchmark::State& state) {
  const auto& scene = room_scene();
  double t = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ev::project_cloud(scene, t));
    t = t < 0.9 ? t + 0.01 : 0.1;
  }
}
BENCHMARK(BM_ProjectCloud)->Unit(benchmark::kMillisecond);

static void BM_EgomotionObjective(benchmark::State& state) {
  const auto& sc = plane_scene();
  ev::EgomotionObjective f(sc.slices, sc.depth, sc.K, ev::EstimatorConfig{});
  const auto x = f.to_params(sc.ego);
  for (auto _ : state) {
    benchmark::DoNotOptimize(f(x));
  }
}
BENCHMARK(BM_EgomotionObjective)->Unit(benchmark::kMicrosecond);
