#include <benchmark/benchmark.h>

#include "tofplane/recovery.hpp"

using namespace tofplane;

namespace {

struct Fixture {
  CameraParams camera;
  ReferenceHistogram reference = synth_reference(160.0, 40.0, 32);
  TransientImage image;
  PeakParams naive;

  Fixture() {
    image = render_image({12.0, 0.18, 40.0}, {0.6, 0.1, 10.0}, camera, reference, 1,
                         BinningMode::hard);
    naive = naive_peak_params(camera);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_FindPeak(benchmark::State& state) {
  const Histogram& h = fixture().image.zones[4];
  for (auto _ : state) {
    benchmark::DoNotOptimize(find_peak(h));
  }
}
BENCHMARK(BM_FindPeak)->Unit(benchmark::kMicrosecond);

void BM_RecoverPlanePeaks(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(recover_plane_peaks(f.image, f.naive, f.camera.zones));
  }
}
BENCHMARK(BM_RecoverPlanePeaks)->Unit(benchmark::kMicrosecond);

void BM_DiffRenderStep(benchmark::State& state) {
  // one Adam iteration of the six-parameter inverse rendering problem
  const Fixture& f = fixture();
  for (auto _ : state) {
    DiffRenderOptions opts;
    opts.seed = 2;
    benchmark::DoNotOptimize(recover_plane_diffrender(f.image, f.reference, f.camera,
                                                      {17.0, 0.21, 60.0}, 1, opts));
  }
}
BENCHMARK(BM_DiffRenderStep)->Unit(benchmark::kMillisecond);

}  // namespace
