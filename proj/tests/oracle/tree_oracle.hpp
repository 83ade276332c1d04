#pragma once

// Test-only reference for CART growth on small datasets. It re-derives every
// candidate split from scratch at every node (no sorting, no prefix sweeps),
// scores children with the textbook Gini formula held as exact fractions,
// and recurses. Independent of the library's split search.

#include <array>
#include <cstdint>
#include <iterator>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

namespace oracle {

struct Sample {
  std::vector<double> x;
  int label = 0;
};

// a / b with b > 0.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

inline bool less(const Fraction& a, const Fraction& b) {
  return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

inline Fraction add(const Fraction& a, const Fraction& b) {
  return {a.num * b.den + b.num * a.den, a.den * b.den};
}

// Gini of a subset as the fraction (n^2 - sum c^2) / n^2.
inline Fraction gini(const std::vector<Sample>& subset) {
  std::array<std::int64_t, 3> c{};
  for (const auto& s : subset) ++c[static_cast<std::size_t>(s.label)];
  const std::int64_t n = static_cast<std::int64_t>(subset.size());
  return {n * n - (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]), n * n};
}

struct Node {
  bool leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::array<double, 3> distribution{};
  std::unique_ptr<Node> left;
  std::unique_ptr<Node> right;
};

inline std::unique_ptr<Node> build(const std::vector<Sample>& samples, std::size_t dim) {
  auto node = std::make_unique<Node>();
  std::array<double, 3> counts{};
  for (const auto& s : samples) counts[static_cast<std::size_t>(s.label)] += 1.0;
  for (std::size_t c = 0; c < 3; ++c) node->distribution[c] = counts[c] / static_cast<double>(samples.size());

  const Fraction parent = gini(samples);
  const std::int64_t n = static_cast<std::int64_t>(samples.size());
  std::optional<Fraction> best_child;  // weighted child impurity, lower is better
  std::size_t best_feature = 0;
  double best_threshold = 0.0;

  for (std::size_t f = 0; f < dim; ++f) {
    std::set<double> values;
    for (const auto& s : samples) values.insert(s.x[f]);
    for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
      const double threshold = (*it + *std::next(it)) / 2.0;
      std::vector<Sample> left;
      std::vector<Sample> right;
      for (const auto& s : samples) (s.x[f] <= threshold ? left : right).push_back(s);
      const Fraction gl = gini(left);
      const Fraction gr = gini(right);
      const std::int64_t nl = static_cast<std::int64_t>(left.size());
      const std::int64_t nr = static_cast<std::int64_t>(right.size());
      const Fraction weighted = add({gl.num * nl, gl.den * n}, {gr.num * nr, gr.den * n});
      if (!best_child || less(weighted, *best_child)) {
        best_child = weighted;
        best_feature = f;
        best_threshold = threshold;
      }
    }
  }
  if (!best_child || !less(*best_child, parent)) return node;

  std::vector<Sample> left;
  std::vector<Sample> right;
  for (const auto& s : samples) (s.x[best_feature] <= best_threshold ? left : right).push_back(s);
  node->leaf = false;
  node->feature = best_feature;
  node->threshold = best_threshold;
  node->left = build(left, dim);
  node->right = build(right, dim);
  return node;
}

inline std::array<double, 3> predict(const Node& root, const std::vector<double>& x) {
  const Node* node = &root;
  while (!node->leaf) node = x[node->feature] <= node->threshold ? node->left.get() : node->right.get();
  return node->distribution;
}

}  // namespace oracle
