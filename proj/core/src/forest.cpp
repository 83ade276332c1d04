#include "gaffect/forest.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>
#include <utility>

#include "gaffect/error.hpp"

namespace gaffect {

namespace {

__extension__ typedef unsigned __int128 u128;

// Sorted (value, class index) pairs of one feature over a node's samples.
using SortBuffer = std::vector<std::pair<double, std::uint8_t>>;

std::size_t total(const ClassCounts& counts) {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

u128 sum_of_squares(const ClassCounts& counts) {
  u128 s = 0;
  for (auto c : counts) s += static_cast<u128>(c) * c;
  return s;
}

bool is_pure(const ClassCounts& counts) {
  return std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
}

// Midpoint that still sends `lo` left and `hi` right under `x <= threshold`.
double midpoint(double lo, double hi) {
  const double mid = lo / 2.0 + hi / 2.0;
  return (mid >= lo && mid < hi) ? mid : lo;
}

// Column-major copy of the training matrix; split search walks one feature
// at a time, so this layout keeps those reads contiguous.
class ColumnView {
 public:
  explicit ColumnView(const LabeledDataset& dataset)
      : n_(dataset.size()), columns_(dataset.size() * dataset.feature_dim()) {
    for (std::size_t s = 0; s < n_; ++s) {
      const auto row = dataset.row(s);
      for (std::size_t f = 0; f < row.size(); ++f) columns_[f * n_ + s] = row[f];
    }
  }

  double operator()(std::size_t sample, std::size_t feature) const {
    return columns_[feature * n_ + sample];
  }

 private:
  std::size_t n_;
  std::vector<double> columns_;
};

struct RowView {
  const LabeledDataset& dataset;
  double operator()(std::size_t sample, std::size_t feature) const {
    return dataset.value(sample, feature);
  }
};

ClassCounts count_labels(std::span<const Label> labels, std::span<const std::size_t> samples) {
  ClassCounts counts{};
  for (auto s : samples) ++counts[label_index(labels[s])];
  return counts;
}

// Split quality is (sum_c L_c^2) / nL + (sum_c R_c^2) / nR, held as the exact
// fraction numerator / denominator; larger means lower weighted Gini.
template <typename ValueAt>
std::optional<Split> find_best_split(const ValueAt& value_at, std::span<const Label> labels,
                                     std::span<const std::size_t> samples,
                                     std::span<const std::size_t> sorted_features,
                                     std::size_t min_samples_leaf, SortBuffer& buffer) {
  const std::size_t n = samples.size();
  if (n < 2 || sorted_features.empty()) return std::nullopt;
  const ClassCounts parent = count_labels(labels, samples);
  if (is_pure(parent)) return std::nullopt;

  bool found = false;
  u128 best_num = 0;
  u128 best_den = 1;
  Split best;

  buffer.resize(n);
  for (const std::size_t feature : sorted_features) {
    for (std::size_t i = 0; i < n; ++i) {
      buffer[i] = {value_at(samples[i], feature), static_cast<std::uint8_t>(labels[samples[i]])};
    }
    std::sort(buffer.begin(), buffer.end());

    ClassCounts left{};
    for (std::size_t k = 0; k + 1 < n; ++k) {
      ++left[buffer[k].second];
      if (buffer[k].first == buffer[k + 1].first) continue;
      const std::size_t n_left = k + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;

      ClassCounts right{};
      for (std::size_t c = 0; c < kNumClasses; ++c) right[c] = parent[c] - left[c];
      const u128 num = sum_of_squares(left) * n_right + sum_of_squares(right) * n_left;
      const u128 den = static_cast<u128>(n_left) * n_right;
      if (!found || num * best_den > best_num * den) {
        found = true;
        best_num = num;
        best_den = den;
        best.feature = feature;
        best.threshold = midpoint(buffer[k].first, buffer[k + 1].first);
      }
    }
  }
  if (!found) return std::nullopt;

  // Decrease = (num / den - P / n) / n with P the parent's sum of squares.
  const u128 lhs = best_num * n;
  const u128 rhs = sum_of_squares(parent) * best_den;
  if (lhs <= rhs) return std::nullopt;
  best.impurity_decrease = static_cast<double>(lhs - rhs) /
                           (static_cast<double>(best_den) * static_cast<double>(n) *
                            static_cast<double>(n));
  return best;
}

// Draws `count` distinct features by a partial Fisher-Yates pass over
// `perm`, then restores `perm` to the identity.
std::vector<std::size_t> draw_features(std::vector<std::size_t>& perm, std::size_t count,
                                       CounterRng& rng) {
  const std::size_t d = perm.size();
  std::vector<std::size_t> swapped(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.bounded(d - k));
    swapped[k] = j;
    std::swap(perm[k], perm[j]);
  }
  std::vector<std::size_t> chosen(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(count));
  for (std::size_t k = count; k-- > 0;) std::swap(perm[k], perm[swapped[k]]);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

template <typename ValueAt>
DecisionTree grow(const ValueAt& value_at, std::span<const Label> labels, std::size_t feature_dim,
                  std::span<const std::size_t> samples, const ForestParams& params,
                  CounterRng& rng) {
  if (samples.empty()) throw InvalidInputError("cannot grow a tree on zero samples");
  const std::size_t mtry = params.mtry.value_or(feature_dim);

  std::vector<std::size_t> index(samples.begin(), samples.end());
  std::vector<std::size_t> perm(feature_dim);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  SortBuffer buffer;

  struct Pending {
    std::uint32_t node;
    std::size_t begin;
    std::size_t end;
    std::size_t depth;
  };

  std::vector<TreeNode> nodes(1);
  std::vector<Pending> stack{{0, 0, index.size(), 0}};
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    const std::span<std::size_t> node_samples(index.data() + p.begin, p.end - p.begin);
    nodes[p.node].counts = count_labels(labels, node_samples);

    if (params.max_depth && p.depth >= *params.max_depth) continue;
    if (node_samples.size() < 2 * params.min_samples_leaf) continue;
    if (is_pure(nodes[p.node].counts)) continue;

    const std::vector<std::size_t> features = draw_features(perm, mtry, rng);
    const auto split = find_best_split(value_at, labels, node_samples, features,
                                       params.min_samples_leaf, buffer);
    if (!split) continue;

    const auto middle =
        std::partition(node_samples.begin(), node_samples.end(), [&](std::size_t s) {
          return value_at(s, split->feature) <= split->threshold;
        });
    const std::size_t mid = p.begin + static_cast<std::size_t>(middle - node_samples.begin());

    const auto left = static_cast<std::uint32_t>(nodes.size());
    nodes.resize(nodes.size() + 2);
    TreeNode& node = nodes[p.node];
    node.feature = static_cast<std::int32_t>(split->feature);
    node.threshold = split->threshold;
    node.left = left;
    node.right = left + 1;
    stack.push_back({left + 1, mid, p.end, p.depth + 1});
    stack.push_back({left, p.begin, mid, p.depth + 1});
  }
  return DecisionTree(std::move(nodes));
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001B3ULL;
    }
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      const auto b = static_cast<unsigned char>(v >> (8 * i));
      bytes(&b, 1);
    }
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

}  // namespace

LabeledDataset::LabeledDataset(std::size_t feature_dim) : feature_dim_(feature_dim) {
  if (feature_dim_ == 0) throw InvalidInputError("feature_dim must be positive");
}

void LabeledDataset::add(std::span<const double> values, Label label) {
  if (values.size() != feature_dim_) {
    throw InvalidInputError("sample width " + std::to_string(values.size()) +
                            " does not match dataset width " + std::to_string(feature_dim_));
  }
  if (label_index(label) >= kNumClasses) throw InvalidInputError("label out of range");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInputError("sample values must be finite");
  }
  values_.insert(values_.end(), values.begin(), values.end());
  labels_.push_back(label);
}

ForestParams resolve_params(const ForestParams& params, std::size_t feature_dim) {
  ForestParams out = params;
  if (out.n_trees < 1) throw InvalidInputError("n_trees must be at least 1");
  if (out.min_samples_leaf < 1) throw InvalidInputError("min_samples_leaf must be at least 1");
  if (!out.mtry) {
    out.mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(feature_dim))));
  }
  if (*out.mtry < 1 || *out.mtry > feature_dim) {
    throw InvalidInputError("mtry must lie in [1, feature_dim]");
  }
  return out;
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    node = &nodes_[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                  : node->right];
  }
  return *node;
}

ClassScores DecisionTree::predict_proba(std::span<const double> x) const {
  const ClassCounts& counts = leaf_for(x).counts;
  const double n = static_cast<double>(total(counts));
  ClassScores out{};
  for (std::size_t c = 0; c < kNumClasses; ++c) out[c] = counts[c] / n;
  return out;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes_[i].is_leaf()) {
      depth[nodes_[i].left] = depth[nodes_[i].right] = depth[i] + 1;
    }
  }
  return deepest;
}

ClassScores RandomForestModel::predict_proba(std::span<const double> x) const {
  if (x.size() != feature_dim) {
    throw InvalidInputError("probe width " + std::to_string(x.size()) + " does not match model width " +
                            std::to_string(feature_dim));
  }
  if (trees.empty()) throw ModelError("forest has no trees");
  ClassScores sum{};
  for (const auto& tree : trees) {
    const ClassScores p = tree.predict_proba(x);
    for (std::size_t c = 0; c < kNumClasses; ++c) sum[c] += p[c];
  }
  const double n = static_cast<double>(trees.size());
  for (auto& v : sum) v /= n;
  return sum;
}

Label RandomForestModel::predict(std::span<const double> x) const {
  return label_from_index(argmax(predict_proba(x)));
}

double gini_impurity(const ClassCounts& counts) {
  const std::size_t n = total(counts);
  if (n == 0) throw InvalidInputError("gini impurity of an empty node is undefined");
  double sum = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    sum += p * p;
  }
  return 1.0 - sum;
}

std::optional<Split> best_split(const LabeledDataset& dataset, std::span<const std::size_t> samples,
                                std::span<const std::size_t> candidate_features,
                                std::size_t min_samples_leaf) {
  for (auto f : candidate_features) {
    if (f >= dataset.feature_dim()) throw InvalidInputError("candidate feature out of range");
  }
  for (auto s : samples) {
    if (s >= dataset.size()) throw InvalidInputError("sample index out of range");
  }
  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  SortBuffer buffer;
  return find_best_split(RowView{dataset}, dataset.labels(), samples, features,
                         std::max<std::size_t>(min_samples_leaf, 1), buffer);
}

DecisionTree grow_tree(const LabeledDataset& dataset, std::span<const std::size_t> samples,
                       const ForestParams& params, CounterRng& rng) {
  const ForestParams resolved = resolve_params(params, dataset.feature_dim());
  for (auto s : samples) {
    if (s >= dataset.size()) throw InvalidInputError("sample index out of range");
  }
  return grow(RowView{dataset}, dataset.labels(), dataset.feature_dim(), samples, resolved, rng);
}

std::uint64_t training_fingerprint(const LabeledDataset& dataset, const ForestParams& params) {
  Fnv1a h;
  h.u64(dataset.feature_dim());
  h.u64(dataset.size());
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    for (double v : dataset.row(s)) h.f64(v);
    h.u64(label_index(dataset.label(s)));
  }
  h.u64(params.n_trees);
  h.u64(params.max_depth ? 1 : 0);
  h.u64(params.max_depth.value_or(0));
  h.u64(params.min_samples_leaf);
  h.u64(params.mtry.value_or(0));
  h.u64(params.bootstrap ? 1 : 0);
  h.u64(params.seed);
  return h.value();
}

RandomForestModel train_forest(const LabeledDataset& dataset, const ForestParams& params,
                               Modality modality, const TrainOptions& options) {
  if (dataset.empty()) throw InvalidInputError("cannot train a forest on an empty dataset");
  const ForestParams resolved = resolve_params(params, dataset.feature_dim());

  RandomForestModel model;
  model.modality = modality;
  model.feature_dim = dataset.feature_dim();
  model.params = resolved;
  model.training_fingerprint = training_fingerprint(dataset, resolved);
  model.trees.resize(resolved.n_trees);

  const ColumnView columns(dataset);
  const std::size_t n = dataset.size();
  auto build = [&](std::size_t t) {
    CounterRng rng(resolved.seed, t);
    std::vector<std::size_t> samples(n);
    if (resolved.bootstrap) {
      for (auto& s : samples) s = static_cast<std::size_t>(rng.bounded(n));
    } else {
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    model.trees[t] = grow(columns, dataset.labels(), dataset.feature_dim(), samples, resolved, rng);
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(resolved.n_trees));
  if (threads == 1) {
    for (std::size_t t = 0; t < resolved.n_trees; ++t) build(t);
    return model;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t t = next++; t < resolved.n_trees; t = next++) build(t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return model;
}

}  // namespace gaffect
