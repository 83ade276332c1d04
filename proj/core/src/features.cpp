#include "gaffect/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaffect/error.hpp"

namespace gaffect {

namespace {

bool finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

void require_nonnegative(const FeatureVector& raw) {
  if (raw.values.empty()) throw InvalidInputError("cannot normalize an empty distance vector");
  for (double v : raw.values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInputError("distance vector entries must be finite and non-negative");
    }
  }
}

FeatureVector divide_all(const FeatureVector& raw, double divisor) {
  FeatureVector out{raw.modality, std::vector<double>(raw.values.size())};
  std::transform(raw.values.begin(), raw.values.end(), out.values.begin(),
                 [divisor](double v) { return v / divisor; });
  return out;
}

// Column values in ascending order, -0.0 before +0.0, so that reductions do
// not depend on row order down to the bit. Values are finite.
void sorted_column(const FeatureMatrix& faces, std::size_t column, std::vector<double>& col) {
  col.resize(faces.rows());
  for (std::size_t r = 0; r < col.size(); ++r) col[r] = faces.row(r)[column];
  std::sort(col.begin(), col.end(), [](double a, double b) {
    return a < b || (a == b && std::signbit(a) && !std::signbit(b));
  });
}

void require_rows(const FeatureMatrix& faces) {
  if (faces.rows() == 0) {
    throw EmptyInputError("image '" + faces.image_id() + "' has no faces to aggregate");
  }
}

}  // namespace

LandmarkSet::LandmarkSet(std::span<const Point2> points) : points_(points.begin(), points.end()) {
  if (points_.size() != kNumLandmarks) {
    throw InvalidInputError("expected " + std::to_string(kNumLandmarks) + " landmarks, got " +
                            std::to_string(points_.size()));
  }
  if (!std::all_of(points_.begin(), points_.end(), finite)) {
    throw InvalidInputError("landmark coordinates must be finite");
  }
}

FeatureMatrix::FeatureMatrix(std::string image_id, Modality modality)
    : FeatureMatrix(std::move(image_id), modality, modality_dim(modality)) {}

FeatureMatrix::FeatureMatrix(std::string image_id, Modality modality, std::size_t dim)
    : image_id_(std::move(image_id)), modality_(modality), dim_(dim) {
  if (dim_ == 0) throw InvalidInputError("feature dimension must be positive");
}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (values.size() != dim_) {
    throw InvalidInputError("row width " + std::to_string(values.size()) + " does not match " +
                            std::string(modality_name(modality_)) + " width " +
                            std::to_string(dim_));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInputError("feature values must be finite");
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

std::string_view aggregation_name(Aggregation aggregation) {
  return aggregation == Aggregation::kMedian ? "median" : "mean";
}

std::optional<Aggregation> parse_aggregation(std::string_view name) {
  if (name == "median") return Aggregation::kMedian;
  if (name == "mean") return Aggregation::kMean;
  return std::nullopt;
}

namespace detail {

std::vector<double> pairwise_distances(std::span<const Point2> points) {
  const std::size_t n = points.size();
  std::vector<double> out;
  out.reserve(n < 2 ? 0 : n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (!finite(points[i])) throw InvalidInputError("landmark coordinates must be finite");
    for (std::size_t j = i + 1; j < n; ++j) {
      out.push_back(std::hypot(points[i].x - points[j].x, points[i].y - points[j].y));
    }
  }
  return out;
}

}  // namespace detail

FeatureVector pairwise_landmark_distances(const LandmarkSet& landmarks) {
  return {Modality::kLandmarks, detail::pairwise_distances(landmarks.points())};
}

FeatureVector normalize_by_max(const FeatureVector& raw) {
  require_nonnegative(raw);
  const double max = *std::max_element(raw.values.begin(), raw.values.end());
  if (max == 0.0) throw DegenerateGeometryError("all landmark distances are zero");
  return divide_all(raw, max);
}

FeatureVector normalize_by_mean(const FeatureVector& raw) {
  require_nonnegative(raw);
  const double mean = std::accumulate(raw.values.begin(), raw.values.end(), 0.0) /
                      static_cast<double>(raw.values.size());
  if (mean == 0.0) throw DegenerateGeometryError("all landmark distances are zero");
  return divide_all(raw, mean);
}

FeatureVector landmark_features(const LandmarkSet& landmarks, DistanceNormalization normalization) {
  const FeatureVector raw = pairwise_landmark_distances(landmarks);
  return normalization == DistanceNormalization::kMax ? normalize_by_max(raw)
                                                      : normalize_by_mean(raw);
}

FeatureVector aggregate_median(const FeatureMatrix& faces) {
  require_rows(faces);
  const std::size_t n = faces.rows();
  FeatureVector out{faces.modality(), std::vector<double>(faces.dim())};
  std::vector<double> col;
  for (std::size_t c = 0; c < faces.dim(); ++c) {
    sorted_column(faces, c, col);
    out.values[c] = n % 2 == 1 ? col[n / 2] : (col[n / 2 - 1] + col[n / 2]) / 2.0;
  }
  return out;
}

FeatureVector aggregate_mean(const FeatureMatrix& faces) {
  require_rows(faces);
  const double n = static_cast<double>(faces.rows());
  FeatureVector out{faces.modality(), std::vector<double>(faces.dim())};
  std::vector<double> col;
  for (std::size_t c = 0; c < faces.dim(); ++c) {
    sorted_column(faces, c, col);
    out.values[c] = std::accumulate(col.begin(), col.end(), 0.0) / n;
  }
  return out;
}

FeatureVector aggregate(const FeatureMatrix& faces, Aggregation aggregation) {
  return aggregation == Aggregation::kMedian ? aggregate_median(faces) : aggregate_mean(faces);
}

}  // namespace gaffect
