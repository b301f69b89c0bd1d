#include <benchmark/benchmark.h>

#include "equiproj/sphere_geom.hpp"
#include "equiproj/warp.hpp"

namespace {

using namespace equiproj;

RasterImage ramp(int w, int h) {
  RasterImage img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<float>(x) / w;
      img.at(x, y, 1) = static_cast<float>(y) / h;
      img.at(x, y, 2) = 0.5f;
    }
  }
  return img;
}

void BM_RoundTrip(benchmark::State& state) {
  const SphereCoord tangent(0.3, 0.7);
  for (auto _ : state) {
    const PlanePoint p{0.2, -0.4};
    benchmark::DoNotOptimize(forward_gnomonic(inverse_gnomonic(p, tangent), tangent));
  }
}
BENCHMARK(BM_RoundTrip);

void BM_ProjectImage(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto mode = state.range(1) == 0 ? WarpMode::Inverse : WarpMode::Scatter;
  const RasterImage src = ramp(n, n);
  const ProjectionJob job{SphereCoord(0.0, 6 * kPi / 16), EquirectSpec(1024, 512), n,
                          Interp::Bilinear, mode, 1};
  for (auto _ : state) benchmark::DoNotOptimize(project_image(src, job));
}
BENCHMARK(BM_ProjectImage)
    ->ArgsProduct({{129, 225}, {0, 1}})
    ->ArgNames({"n", "scatter"})
    ->Unit(benchmark::kMillisecond);

void BM_ExtractTangent(benchmark::State& state) {
  const RasterImage equi = ramp(2048, 1024);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_tangent_image(equi, SphereCoord(0.5, kPi / 4), n));
  }
}
BENCHMARK(BM_ExtractTangent)->Arg(225)->Arg(513)->Unit(benchmark::kMillisecond);

}  // namespace
