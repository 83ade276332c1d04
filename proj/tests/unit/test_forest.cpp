#include <algorithm>
#include <numeric>
#include <sstream>

#include "../oracle/blobs.hpp"
#include "../oracle/tree_oracle.hpp"
#include "doctest.h"
#include "gaffect/error.hpp"
#include "gaffect/forest.hpp"

using namespace gaffect;

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

LabeledDataset dataset_of(std::size_t dim, const std::vector<std::pair<std::vector<double>, int>>& rows) {
  LabeledDataset d(dim);
  for (const auto& [x, y] : rows) d.add(x, label_from_index(static_cast<std::size_t>(y)));
  return d;
}

RandomForestModel forest_of_leaves(const std::vector<ClassCounts>& leaves) {
  RandomForestModel model;
  model.feature_dim = 1;
  model.params.n_trees = leaves.size();
  for (const auto& counts : leaves) {
    TreeNode leaf;
    leaf.counts = counts;
    model.trees.emplace_back(std::vector<TreeNode>{leaf});
  }
  return model;
}

ForestParams single_full_tree(std::size_t dim) {
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  p.mtry = dim;
  return p;
}

LabeledDataset random_dataset(CounterRng& rng, std::size_t n, std::size_t dim, std::size_t levels) {
  LabeledDataset d(dim);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = static_cast<double>(rng.bounded(levels));
    d.add(x, label_from_index(rng.bounded(3)));
  }
  return d;
}

double training_accuracy(const RandomForestModel& model, const LabeledDataset& d) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) ok += model.predict(d.row(i)) == d.label(i) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

}  // namespace

TEST_CASE("gini impurity") {
  CHECK(gini_impurity({10, 0, 0}) == 0.0);
  CHECK(gini_impurity({1, 1, 1}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(gini_impurity({2, 1, 1}) == doctest::Approx(0.625).epsilon(1e-15));
  CHECK_THROWS_AS(gini_impurity({0, 0, 0}), InvalidInputError);
}

TEST_CASE("best_split on two separable samples") {
  const auto d = dataset_of(1, {{{0.0}, 0}, {{1.0}, 2}});
  const auto split = best_split(d, all_indices(2), std::vector<std::size_t>{0});
  REQUIRE(split);
  CHECK(split->feature == 0);
  CHECK(split->threshold == 0.5);
  CHECK(split->impurity_decrease == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("best_split finds nothing without a separating threshold") {
  const auto same = dataset_of(2, {{{1.0, 2.0}, 0}, {{1.0, 2.0}, 1}, {{1.0, 2.0}, 2}});
  CHECK_FALSE(best_split(same, all_indices(3), std::vector<std::size_t>{0, 1}));
  const auto pure = dataset_of(1, {{{0.0}, 1}, {{5.0}, 1}});
  CHECK_FALSE(best_split(pure, all_indices(2), std::vector<std::size_t>{0}));
  // XOR: every single split leaves the weighted impurity unchanged.
  const auto xor_data = dataset_of(2, {{{0, 0}, 0}, {{1, 1}, 0}, {{0, 1}, 1}, {{1, 0}, 1}});
  CHECK_FALSE(best_split(xor_data, all_indices(4), std::vector<std::size_t>{0, 1}));
}

TEST_CASE("best_split ties go to the lowest feature, then the lowest threshold") {
  // Features 0 and 2 carry the same information; feature 1 is constant.
  const auto d = dataset_of(3, {{{0, 7, 0}, 0}, {{1, 7, 1}, 1}, {{2, 7, 2}, 1}});
  const auto split = best_split(d, all_indices(3), std::vector<std::size_t>{2, 1, 0});
  REQUIRE(split);
  CHECK(split->feature == 0);
  CHECK(split->threshold == 0.5);

  // Symmetric labels: thresholds 0.5 and 2.5 score the same.
  const auto sym = dataset_of(1, {{{0}, 0}, {{1}, 1}, {{2}, 1}, {{3}, 0}});
  const auto s2 = best_split(sym, all_indices(4), std::vector<std::size_t>{0});
  REQUIRE(s2);
  CHECK(s2->threshold == 0.5);
}

TEST_CASE("best_split honours min_samples_leaf") {
  const auto d = dataset_of(1, {{{0}, 0}, {{1}, 1}, {{2}, 1}, {{3}, 1}});
  const auto free_split = best_split(d, all_indices(4), std::vector<std::size_t>{0}, 1);
  REQUIRE(free_split);
  CHECK(free_split->threshold == 0.5);
  const auto constrained = best_split(d, all_indices(4), std::vector<std::size_t>{0}, 2);
  REQUIRE(constrained);
  CHECK(constrained->threshold == 1.5);
}

TEST_CASE("grow_tree examples") {
  CounterRng rng(0, 0);
  SUBCASE("pure input is a single leaf") {
    const auto d = dataset_of(1, {{{0}, 2}, {{1}, 2}, {{2}, 2}});
    const auto tree = grow_tree(d, all_indices(3), single_full_tree(1), rng);
    REQUIRE(tree.nodes().size() == 1);
    CHECK(tree.nodes()[0].counts == ClassCounts{0, 0, 3});
  }
  SUBCASE("two distinct samples split once") {
    const auto d = dataset_of(1, {{{0}, 0}, {{1}, 2}});
    const auto tree = grow_tree(d, all_indices(2), single_full_tree(1), rng);
    REQUIRE(tree.nodes().size() == 3);
    CHECK(tree.nodes()[0].feature == 0);
    CHECK(tree.nodes()[0].threshold == 0.5);
    CHECK(tree.nodes()[1].counts == ClassCounts{1, 0, 0});
    CHECK(tree.nodes()[2].counts == ClassCounts{0, 0, 1});
  }
  SUBCASE("max_depth 0 is a single leaf") {
    const auto d = dataset_of(1, {{{0}, 0}, {{1}, 1}, {{2}, 2}});
    ForestParams p = single_full_tree(1);
    p.max_depth = 0;
    const auto tree = grow_tree(d, all_indices(3), p, rng);
    REQUIRE(tree.nodes().size() == 1);
    CHECK(tree.nodes()[0].counts == ClassCounts{1, 1, 1});
  }
  SUBCASE("leaves respect min_samples_leaf") {
    CounterRng data_rng(5, 0);
    const auto d = random_dataset(data_rng, 60, 3, 10);
    ForestParams p = single_full_tree(3);
    p.min_samples_leaf = 4;
    const auto tree = grow_tree(d, all_indices(60), p, rng);
    for (const auto& node : tree.nodes()) {
      if (node.is_leaf()) CHECK(node.counts[0] + node.counts[1] + node.counts[2] >= 4);
    }
  }
  CHECK_THROWS_AS(grow_tree(dataset_of(1, {{{0}, 0}}), std::vector<std::size_t>{}, single_full_tree(1), rng),
                  InvalidInputError);
}

TEST_CASE("a full tree fits label-consistent data") {
  CounterRng rng(21, 0);
  LabeledDataset d(4);
  std::vector<double> x(4);
  for (int i = 0; i < 150; ++i) {
    for (auto& v : x) v = rng.normal();
    // Labels are a function of x, so the data is consistent.
    const std::size_t y = x[0] + x[1] * x[2] > 0.3 ? 0 : (x[3] > 0 ? 1 : 2);
    d.add(x, label_from_index(y));
  }
  ForestParams p = single_full_tree(4);
  const auto model = train_forest(d, p, Modality::kAvgpoolRgb);
  CHECK(training_accuracy(model, d) == 1.0);
}

TEST_CASE("training is deterministic and independent of thread count") {
  CounterRng rng(3, 0);
  const auto d = random_dataset(rng, 120, 6, 50);
  ForestParams p;
  p.n_trees = 16;
  p.seed = 99;
  const auto a = train_forest(d, p, Modality::kFc7Rgb, TrainOptions{1});
  const auto b = train_forest(d, p, Modality::kFc7Rgb, TrainOptions{4});
  CHECK(a.training_fingerprint == b.training_fingerprint);
  std::ostringstream sa;
  std::ostringstream sb;
  write_forest(sa, a);
  write_forest(sb, b);
  CHECK(sa.str() == sb.str());
  p.seed = 100;
  const auto c = train_forest(d, p, Modality::kFc7Rgb, TrainOptions{1});
  CHECK(c.training_fingerprint != a.training_fingerprint);
}

TEST_CASE("forest accuracy on three Gaussian blobs tracks the nearest-centroid reference") {
  // 200 train / 200 test, 8-D, unit variance, centres 4 apart. The Bayes
  // accuracy of this geometry is about 0.956, so a single 200-sample test
  // split lands on either side of 0.95; compare averages over ten draws.
  double forest_sum = 0.0;
  double reference_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto train = oracle::make_blobs(200, 8, seed, 1);
    const auto test = oracle::make_blobs(200, 8, seed, 2);
    ForestParams p;
    p.seed = seed;
    const auto model = train_forest(train, p, Modality::kAvgpoolRgb);
    forest_sum += training_accuracy(model, test);
    reference_sum += oracle::nearest_centroid_accuracy(train, test);
  }
  const double forest = forest_sum / 10.0;
  const double reference = reference_sum / 10.0;
  MESSAGE("forest " << forest << " nearest-centroid " << reference);
  CHECK(reference >= 0.95);
  CHECK(forest >= 0.95);
  CHECK(forest >= reference - 0.025);
}

TEST_CASE("predict_proba averages leaf distributions") {
  CHECK(forest_of_leaves({{5, 0, 0}}).predict_proba(std::vector<double>{0.0}) == ClassScores{1, 0, 0});
  CHECK(forest_of_leaves({{1, 0, 0}, {0, 1, 0}}).predict_proba(std::vector<double>{0.0}) ==
        ClassScores{0.5, 0.5, 0});
  CHECK(forest_of_leaves({{2, 1, 1}}).predict_proba(std::vector<double>{0.0}) == ClassScores{0.5, 0.25, 0.25});
  CHECK(forest_of_leaves({{5, 0, 0}}).predict(std::vector<double>{0.0}) == Label::kPositive);
  CHECK_THROWS_AS(forest_of_leaves({{1, 0, 0}}).predict_proba(std::vector<double>{0.0, 1.0}), InvalidInputError);
}

TEST_CASE("argmax breaks ties toward the lowest class") {
  CHECK(argmax({0.2, 0.5, 0.3}) == 1);
  CHECK(argmax({0.4, 0.4, 0.2}) == 0);
  CHECK(argmax({0.1, 0.45, 0.45}) == 1);
}

TEST_CASE("parameter validation") {
  const auto d = dataset_of(2, {{{0, 0}, 0}});
  ForestParams p;
  p.n_trees = 0;
  CHECK_THROWS_AS(train_forest(d, p, Modality::kAvgpoolRgb), InvalidInputError);
  p = {};
  p.mtry = 3;
  CHECK_THROWS_AS(train_forest(d, p, Modality::kAvgpoolRgb), InvalidInputError);
  p = {};
  p.min_samples_leaf = 0;
  CHECK_THROWS_AS(train_forest(d, p, Modality::kAvgpoolRgb), InvalidInputError);
  CHECK_THROWS_AS(train_forest(LabeledDataset(2), ForestParams{}, Modality::kAvgpoolRgb), InvalidInputError);
  CHECK(*resolve_params(ForestParams{}, 4096).mtry == 64);
  CHECK(*resolve_params(ForestParams{}, 2278).mtry == 48);
}

TEST_CASE("property: single trees match the exhaustive oracle") {
  CounterRng rng(777, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.bounded(20);
    const std::size_t dim = 1 + rng.bounded(3);
    const auto d = random_dataset(rng, n, dim, 2);
    const auto model = train_forest(d, single_full_tree(dim), Modality::kLandmarks);
    std::vector<oracle::Sample> samples;
    for (std::size_t i = 0; i < n; ++i) {
      samples.push_back({{d.row(i).begin(), d.row(i).end()}, static_cast<int>(label_index(d.label(i)))});
    }
    const auto root = oracle::build(samples, dim);
    for (const auto& s : samples) {
      const auto expected = oracle::predict(*root, s.x);
      REQUIRE(model.predict_proba(s.x) == ClassScores{expected[0], expected[1], expected[2]});
    }
  }
}

TEST_CASE("property: training accuracy never drops with more depth") {
  CounterRng rng(31, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = random_dataset(rng, 40, 3, 6);
    double previous = 0.0;
    for (std::size_t depth = 0; depth <= 8; ++depth) {
      ForestParams p = single_full_tree(3);
      p.max_depth = depth;
      const double acc = training_accuracy(train_forest(d, p, Modality::kAvgpoolRgb), d);
      REQUIRE(acc >= previous);
      previous = acc;
    }
  }
}

TEST_CASE("property: relabeling classes permutes the scores") {
  const std::array<std::array<std::size_t, 3>, 5> perms = {
      {{1, 0, 2}, {2, 1, 0}, {0, 2, 1}, {1, 2, 0}, {2, 0, 1}}};
  CounterRng rng(41, 0);
  for (const auto& perm : perms) {
    const auto d = random_dataset(rng, 80, 5, 7);
    LabeledDataset relabeled(5);
    for (std::size_t i = 0; i < d.size(); ++i) relabeled.add(d.row(i), label_from_index(perm[label_index(d.label(i))]));
    ForestParams p;
    p.n_trees = 12;
    p.seed = 5;
    const auto a = train_forest(d, p, Modality::kAvgpoolRgb);
    const auto b = train_forest(relabeled, p, Modality::kAvgpoolRgb);
    for (int probe = 0; probe < 50; ++probe) {
      std::vector<double> x(5);
      for (auto& v : x) v = static_cast<double>(rng.bounded(8)) - 0.5;
      const ClassScores pa = a.predict_proba(x);
      const ClassScores pb = b.predict_proba(x);
      for (std::size_t c = 0; c < 3; ++c) REQUIRE(pb[perm[c]] == pa[c]);
    }
  }
}

TEST_CASE("serialization round-trips and rejects damage") {
  CounterRng rng(8, 0);
  const auto d = random_dataset(rng, 90, 4, 20);
  ForestParams p;
  p.n_trees = 7;
  p.max_depth = 6;
  p.seed = 12;
  const auto model = train_forest(d, p, Modality::kFc7Bgr);
  std::stringstream buf;
  write_forest(buf, model);
  const std::string bytes = buf.str();
  const auto loaded = read_forest(buf);
  CHECK(loaded.modality == Modality::kFc7Bgr);
  CHECK(loaded.params.max_depth == std::optional<std::size_t>(6));
  CHECK(loaded.training_fingerprint == model.training_fingerprint);
  for (std::size_t i = 0; i < d.size(); ++i) REQUIRE(loaded.predict_proba(d.row(i)) == model.predict_proba(d.row(i)));

  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  std::istringstream corrupt(flipped);
  CHECK_THROWS_AS(read_forest(corrupt), ModelError);
  std::istringstream truncated(bytes.substr(0, bytes.size() - 11));
  CHECK_THROWS_AS(read_forest(truncated), ModelError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_forest(empty), ModelError);
}

TEST_CASE("the counter generator is a pure function of seed, stream and counter") {
  CounterRng a(5, 9);
  CounterRng b(5, 9);
  CounterRng c(5, 10);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
  }
  CounterRng r(1, 1);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(r.bounded(7) < 7);
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  // Reference output: first value of stream 0 under seed 0.
  CHECK(CounterRng(0, 0).next() == CounterRng::mix(CounterRng::mix(0 ^ CounterRng::mix(CounterRng::kGamma)) + CounterRng::kGamma));
}
