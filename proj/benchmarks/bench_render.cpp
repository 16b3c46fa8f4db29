#include <benchmark/benchmark.h>

#include "tofplane/forward_model.hpp"
#include "tofplane/render_core.hpp"
#include "tofplane/simulate.hpp"

using namespace tofplane;

namespace {

const CameraParams& camera() {
  static const CameraParams c;
  return c;
}

const ReferenceHistogram& reference() {
  static const ReferenceHistogram ref = synth_reference(160.0, 40.0, 32);
  return ref;
}

void BM_RenderImageHard(benchmark::State& state) {
  const PlaneGeometry g{15.0, 0.2, 60.0};
  const ReflectanceParams f{0.6, 0.1, 10.0};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        render_image(g, f, camera(), reference(), seed++, BinningMode::hard));
  }
}
BENCHMARK(BM_RenderImageHard)->Unit(benchmark::kMillisecond);

void BM_RenderImageSoft(benchmark::State& state) {
  const PlaneGeometry g{15.0, 0.2, 60.0};
  const ReflectanceParams f{0.6, 0.1, 10.0};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        render_image(g, f, camera(), reference(), seed++, BinningMode::soft));
  }
}
BENCHMARK(BM_RenderImageSoft)->Unit(benchmark::kMillisecond);

void BM_RenderImageSoftDual(benchmark::State& state) {
  // one full jacobian pass: value plus eight tangents
  const detail::ReflS<Dual> refl{Dual::seeded(0.6, 3), Dual::seeded(0.1, 4),
                                 Dual::seeded(10.0, 5)};
  const detail::SensorS<Dual> sensor{camera().gain, camera().saturation, camera().crosstalk,
                                     camera().ref_rescale, camera().bin_offset_ps};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(detail::render_image_t<Dual>(
        Dual::seeded(15.0, 0), Dual::seeded(0.2, 1), Dual::seeded(60.0, 2), refl, sensor,
        camera(), reference(), seed++, BinningMode::soft));
  }
}
BENCHMARK(BM_RenderImageSoftDual)->Unit(benchmark::kMillisecond);

void BM_SampleZoneRays(benchmark::State& state) {
  const ZoneFov zone = camera().zones[0];
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_zone_rays(zone, 2304, seed++));
  }
}
BENCHMARK(BM_SampleZoneRays)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
