#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "gaffect/random.hpp"
#include "gaffect/types.hpp"

namespace gaffect {

/// Dense labeled samples, row-major.
class LabeledDataset {
 public:
  explicit LabeledDataset(std::size_t feature_dim);

  /// Throws InvalidInputError on width mismatch or non-finite values.
  void add(std::span<const double> values, Label label);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * feature_dim_, feature_dim_};
  }
  double value(std::size_t sample, std::size_t feature) const {
    return values_[sample * feature_dim_ + feature];
  }
  Label label(std::size_t i) const { return labels_[i]; }
  std::span<const Label> labels() const { return labels_; }

 private:
  std::size_t feature_dim_;
  std::vector<double> values_;
  std::vector<Label> labels_;
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;  // nullopt: unlimited
  std::size_t min_samples_leaf = 1;
  std::optional<std::size_t> mtry;       // nullopt: ceil(sqrt(feature_dim))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

/// `params` with mtry filled in; throws InvalidInputError on invalid values.
ForestParams resolve_params(const ForestParams& params, std::size_t feature_dim);

/// Flat tree node. `feature < 0` marks a leaf. Samples with
/// `x[feature] <= threshold` go to `left`. Counts are kept on every node.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  ClassCounts counts{};

  bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes);

  std::span<const TreeNode> nodes() const { return nodes_; }
  const TreeNode& leaf_for(std::span<const double> x) const;
  /// Leaf class counts normalized to sum 1.
  ClassScores predict_proba(std::span<const double> x) const;
  std::size_t depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

struct RandomForestModel {
  Modality modality = Modality::kAvgpoolRgb;
  std::size_t feature_dim = 0;
  ForestParams params;  // resolved
  std::uint64_t training_fingerprint = 0;
  std::vector<DecisionTree> trees;

  /// Mean of per-tree leaf distributions. Throws InvalidInputError on a
  /// dimension mismatch.
  ClassScores predict_proba(std::span<const double> x) const;
  Label predict(std::span<const double> x) const;
};

/// 1 - sum_c p_c^2. Throws InvalidInputError when all counts are zero.
double gini_impurity(const ClassCounts& counts);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

/// Best weighted-Gini split of `samples` over `candidate_features`, with
/// thresholds at midpoints between consecutive distinct values. Candidates
/// are compared in exact integer arithmetic; ties go to the lowest feature
/// index, then the lowest threshold. Splits leaving fewer than
/// `min_samples_leaf` samples on either side are not considered. Returns
/// nullopt when no split has a positive decrease.
std::optional<Split> best_split(const LabeledDataset& dataset, std::span<const std::size_t> samples,
                                std::span<const std::size_t> candidate_features,
                                std::size_t min_samples_leaf = 1);

/// Grows one CART tree over `samples` (indices may repeat). At each node
/// that may still split, `mtry` candidate features are drawn without
/// replacement from `rng` by a partial Fisher-Yates shuffle of [0, dim).
/// A node becomes a leaf at max_depth, below 2 * min_samples_leaf samples,
/// when pure, or when no split helps.
DecisionTree grow_tree(const LabeledDataset& dataset, std::span<const std::size_t> samples,
                       const ForestParams& params, CounterRng& rng);

struct TrainOptions {
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Tree t uses the stream CounterRng(params.seed, t); the bootstrap resample
/// is drawn first, then the tree is grown from the same stream. The result
/// does not depend on `options.threads`.
RandomForestModel train_forest(const LabeledDataset& dataset, const ForestParams& params,
                               Modality modality, const TrainOptions& options = {});

/// FNV-1a over the dataset contents and the resolved parameters.
std::uint64_t training_fingerprint(const LabeledDataset& dataset, const ForestParams& params);

// Binary model format, little-endian regardless of host:
//   "GAFFOREST" magic (9 bytes), u32 version (=1), u8 modality, u64 feature_dim,
//   u64 n_trees, u8 has_max_depth, u64 max_depth, u64 min_samples_leaf, u64 mtry,
//   u8 bootstrap, u64 seed, u64 fingerprint, then per tree u64 node_count and
//   per node i32 feature, f64 threshold, u32 left, u32 right, 3 x u32 counts,
//   and finally a u64 FNV-1a checksum of every preceding byte.
inline constexpr std::uint32_t kForestFormatVersion = 1;

void write_forest(std::ostream& out, const RandomForestModel& model);
/// Throws ModelError on a bad magic, version, checksum or truncated input.
RandomForestModel read_forest(std::istream& in);
void save_forest(const std::filesystem::path& path, const RandomForestModel& model);
RandomForestModel load_forest(const std::filesystem::path& path);

}  // namespace gaffect
