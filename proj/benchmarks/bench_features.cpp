#include <benchmark/benchmark.h>

#include "gaffect/features.hpp"
#include "gaffect/random.hpp"
#include "gaffect/synth.hpp"

namespace {

void BM_LandmarkFeatures(benchmark::State& state) {
  const auto points = gaffect::landmark_template();
  const gaffect::LandmarkSet landmarks(points);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gaffect::landmark_features(landmarks));
  }
}
BENCHMARK(BM_LandmarkFeatures);

void BM_AggregateMedian(benchmark::State& state) {
  const auto faces = static_cast<std::size_t>(state.range(0));
  gaffect::CounterRng rng(7, 0);
  gaffect::FeatureMatrix matrix("bench", gaffect::Modality::kFc7Rgb);
  std::vector<double> row(gaffect::kFc7Dim);
  for (std::size_t f = 0; f < faces; ++f) {
    for (auto& v : row) v = rng.normal();
    matrix.append_row(row);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(gaffect::aggregate_median(matrix));
  }
}
BENCHMARK(BM_AggregateMedian)->Arg(1)->Arg(4)->Arg(16);

}  // namespace
