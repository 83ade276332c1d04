#include <benchmark/benchmark.h>

#include <numeric>

#include "gaffect/forest.hpp"
#include "gaffect/random.hpp"

namespace {

// Three Gaussian blobs; only the first three coordinates carry signal.
gaffect::LabeledDataset blobs(std::size_t n, std::size_t dim) {
  gaffect::CounterRng rng(42, 0);
  gaffect::LabeledDataset data(dim);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 3;
    for (std::size_t d = 0; d < dim; ++d) x[d] = rng.normal() + (d == label ? 2.0 : 0.0);
    data.add(x, gaffect::label_from_index(label));
  }
  return data;
}

void BM_BestSplit(benchmark::State& state) {
  const auto data = blobs(static_cast<std::size_t>(state.range(0)), 64);
  std::vector<std::size_t> samples(data.size());
  std::iota(samples.begin(), samples.end(), std::size_t{0});
  std::vector<std::size_t> features(64);
  std::iota(features.begin(), features.end(), std::size_t{0});
  for (auto _ : state) {
    benchmark::DoNotOptimize(gaffect::best_split(data, samples, features));
  }
}
BENCHMARK(BM_BestSplit)->Arg(256)->Arg(1024);

void BM_TrainForest(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto data = blobs(600, dim);
  gaffect::ForestParams params;
  params.n_trees = 20;
  params.seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gaffect::train_forest(data, params, gaffect::Modality::kAvgpoolRgb,
                                                   gaffect::TrainOptions{1}));
  }
}
BENCHMARK(BM_TrainForest)->Arg(512)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_PredictProba(benchmark::State& state) {
  const auto data = blobs(600, 512);
  gaffect::ForestParams params;
  params.seed = 3;
  const auto model = gaffect::train_forest(data, params, gaffect::Modality::kAvgpoolRgb);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict_proba(data.row(i++ % data.size())));
  }
}
BENCHMARK(BM_PredictProba);

}  // namespace
