#pragma once

#include <span>
#include <string>
#include <vector>

#include "gaffect/types.hpp"

namespace gaffect {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// The 68 facial landmarks of one face, in image pixel coordinates.
class LandmarkSet {
 public:
  /// Throws InvalidInputError unless exactly 68 finite points are given.
  explicit LandmarkSet(std::span<const Point2> points);

  std::span<const Point2> points() const { return points_; }

 private:
  std::vector<Point2> points_;
};

/// A descriptor of one face (or of one image, after aggregation).
struct FeatureVector {
  Modality modality = Modality::kAvgpoolRgb;
  std::vector<double> values;
};

/// Row-major n_faces x dim matrix of one modality for one image. Zero rows
/// is a valid state and means no faces were detected.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::string image_id, Modality modality);
  /// Generic-width matrix, used by the internal kernels and tests.
  FeatureMatrix(std::string image_id, Modality modality, std::size_t dim);

  const std::string& image_id() const { return image_id_; }
  Modality modality() const { return modality_; }
  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const { return data_.empty(); }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> data() const { return data_; }

  /// Throws InvalidInputError on width mismatch or non-finite values.
  void append_row(std::span<const double> values);

 private:
  std::string image_id_;
  Modality modality_ = Modality::kAvgpoolRgb;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

enum class Aggregation { kMedian, kMean };

std::string_view aggregation_name(Aggregation aggregation);
std::optional<Aggregation> parse_aggregation(std::string_view name);

enum class DistanceNormalization { kMax, kMean };

namespace detail {

/// Euclidean distances of all unordered pairs (i, j), i < j, in
/// lexicographic pair order. Output length is n(n-1)/2.
std::vector<double> pairwise_distances(std::span<const Point2> points);

}  // namespace detail

/// Raw (unnormalized) landmark distance vector of length 2278.
FeatureVector pairwise_landmark_distances(const LandmarkSet& landmarks);

/// Divides every entry by the largest one. Throws DegenerateGeometryError
/// when the maximum is zero and InvalidInputError on empty or negative input.
FeatureVector normalize_by_max(const FeatureVector& raw);

/// Divides every entry by the mean entry. Only for experiments; the default
/// pipeline normalizes by the maximum.
FeatureVector normalize_by_mean(const FeatureVector& raw);

/// Distances followed by the chosen normalization.
FeatureVector landmark_features(const LandmarkSet& landmarks,
                                DistanceNormalization normalization = DistanceNormalization::kMax);

/// Component-wise median over rows; an even row count averages the two
/// middle order statistics. Throws EmptyInputError on zero rows.
FeatureVector aggregate_median(const FeatureMatrix& faces);

/// Component-wise mean over rows. Throws EmptyInputError on zero rows.
FeatureVector aggregate_mean(const FeatureMatrix& faces);

FeatureVector aggregate(const FeatureMatrix& faces, Aggregation aggregation);

}  // namespace gaffect
