#include "gaffect/types.hpp"

#include <stdexcept>

#include "gaffect/error.hpp"

namespace gaffect {

namespace {

constexpr std::array<std::string_view, kNumClasses> kLabelNames = {"Positive", "Neutral",
                                                                   "Negative"};
constexpr std::array<std::string_view, kNumModalities> kModalityNames = {
    "avgpool_rgb", "avgpool_bgr", "fc7_rgb", "fc7_bgr", "landmarks"};

}  // namespace

std::string_view label_name(Label label) { return kLabelNames.at(label_index(label)); }

std::optional<Label> parse_label(std::string_view name) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kLabelNames[i] == name) return label_from_index(i);
  }
  return std::nullopt;
}

Label label_from_index(std::size_t index) {
  if (index >= kNumClasses) throw InvalidInputError("class index out of range: " + std::to_string(index));
  return static_cast<Label>(index);
}

std::size_t argmax(const ClassScores& scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

std::size_t modality_dim(Modality modality) {
  switch (modality) {
    case Modality::kAvgpoolRgb:
    case Modality::kAvgpoolBgr:
      return kAvgpoolDim;
    case Modality::kFc7Rgb:
    case Modality::kFc7Bgr:
      return kFc7Dim;
    case Modality::kLandmarks:
      return kLandmarkDim;
  }
  throw InvalidInputError("unknown modality");
}

std::string_view modality_name(Modality modality) { return kModalityNames.at(modality_index(modality)); }

std::optional<Modality> parse_modality(std::string_view name) {
  for (std::size_t i = 0; i < kNumModalities; ++i) {
    if (kModalityNames[i] == name) return kAllModalities[i];
  }
  return std::nullopt;
}

}  // namespace gaffect
