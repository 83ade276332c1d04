#pragma once

// Test-only fixture: three unit-variance Gaussian blobs whose centres form an
// equilateral triangle with side 4, embedded in the first two of `dim`
// coordinates, and a nearest-centroid classifier used as a reference.

#include <array>
#include <cmath>
#include <vector>

#include "gaffect/forest.hpp"
#include "gaffect/random.hpp"

namespace oracle {

inline std::array<std::vector<double>, 3> blob_centres(std::size_t dim) {
  std::array<std::vector<double>, 3> c;
  for (auto& v : c) v.assign(dim, 0.0);
  c[1][0] = 4.0;
  c[2][0] = 2.0;
  c[2][1] = 2.0 * std::sqrt(3.0);
  return c;
}

inline gaffect::LabeledDataset make_blobs(std::size_t n, std::size_t dim, std::uint64_t seed, std::uint64_t stream) {
  const auto centres = blob_centres(dim);
  gaffect::CounterRng rng(seed, stream);
  gaffect::LabeledDataset data(dim);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 3;
    for (std::size_t d = 0; d < dim; ++d) x[d] = centres[label][d] + rng.normal();
    data.add(x, gaffect::label_from_index(label));
  }
  return data;
}

// Centroids estimated on `train`, accuracy measured on `test`.
inline double nearest_centroid_accuracy(const gaffect::LabeledDataset& train, const gaffect::LabeledDataset& test) {
  const std::size_t dim = train.feature_dim();
  std::array<std::vector<double>, 3> mean;
  std::array<double, 3> count{};
  for (auto& m : mean) m.assign(dim, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const std::size_t c = gaffect::label_index(train.label(i));
    count[c] += 1.0;
    for (std::size_t d = 0; d < dim; ++d) mean[c][d] += train.value(i, d);
  }
  for (std::size_t c = 0; c < 3; ++c) {
    for (auto& v : mean[c]) v /= count[c];
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::size_t best = 0;
    double best_d2 = INFINITY;
    for (std::size_t c = 0; c < 3; ++c) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) d2 += (test.value(i, d) - mean[c][d]) * (test.value(i, d) - mean[c][d]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = c;
      }
    }
    correct += best == gaffect::label_index(test.label(i)) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace oracle
