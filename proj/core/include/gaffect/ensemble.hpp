#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaffect/features.hpp"
#include "gaffect/forest.hpp"
#include "gaffect/types.hpp"

namespace gaffect {

// Slot order is fixed and shared by the bundle format and reports.
enum class SlotId : std::uint8_t {
  kAvgpoolRgb = 0,
  kAvgpoolBgr = 1,
  kFc7Rgb = 2,
  kFc7Bgr = 3,
  kLandmarks = 4,
  kFullImage = 5,
};

inline constexpr std::size_t kNumSlots = 6;
inline constexpr std::array<SlotId, kNumSlots> kAllSlots = {
    SlotId::kAvgpoolRgb, SlotId::kAvgpoolBgr, SlotId::kFc7Rgb,
    SlotId::kFc7Bgr,     SlotId::kLandmarks,  SlotId::kFullImage};

enum class SlotKind { kForest, kExternalScore };

std::string_view slot_name(SlotId id);
std::optional<SlotId> parse_slot(std::string_view name);
inline std::size_t slot_index(SlotId id) { return static_cast<std::size_t>(id); }
SlotKind slot_kind(SlotId id);
/// Modality scored by a forest slot; nullopt for the full-image slot.
std::optional<Modality> slot_modality(SlotId id);
SlotId slot_for(Modality modality);

struct WeakPredictorSlot {
  SlotId id = SlotId::kAvgpoolRgb;
  std::optional<RandomForestModel> model;  // forest slots only
  double weight = 0.0;
};

/// Whether the full-image score joins the fusion on images with faces.
enum class FullImageMode { kAlways, kFallbackOnly };

std::string_view full_image_mode_name(FullImageMode mode);
std::optional<FullImageMode> parse_full_image_mode(std::string_view name);

/// How validation accuracy turns into a fusion weight.
///   kAccuracy:            w = accuracy
///   kAccuracyMinusChance: w = max(0, accuracy - 1/3)
///   kSoftmax:             w = exp(accuracy / 0.05), normalized over slots that scored records
enum class WeightPolicy { kAccuracy, kAccuracyMinusChance, kSoftmax };

std::string_view weight_policy_name(WeightPolicy policy);
std::optional<WeightPolicy> parse_weight_policy(std::string_view name);

using SlotWeights = std::array<double, kNumSlots>;

class EnsembleModel {
 public:
  /// Throws ModelError unless slots appear in kAllSlots order, forest slots
  /// carry a model of the matching modality, weights are finite and
  /// non-negative, and at least one weight is positive.
  EnsembleModel(std::array<WeakPredictorSlot, kNumSlots> slots,
                FullImageMode full_image_mode = FullImageMode::kAlways,
                Aggregation aggregation = Aggregation::kMedian);

  const std::array<WeakPredictorSlot, kNumSlots>& slots() const { return slots_; }
  const WeakPredictorSlot& slot(SlotId id) const { return slots_[slot_index(id)]; }
  SlotWeights weights() const;
  FullImageMode full_image_mode() const { return full_image_mode_; }
  Aggregation aggregation() const { return aggregation_; }

  EnsembleModel with_weights(const SlotWeights& weights) const;
  EnsembleModel with_full_image_mode(FullImageMode mode) const;
  EnsembleModel with_aggregation(Aggregation aggregation) const;

 private:
  std::array<WeakPredictorSlot, kNumSlots> slots_;
  FullImageMode full_image_mode_;
  Aggregation aggregation_;
};

struct Box {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
};

struct DetectionBundle {
  std::vector<Box> primary_detections;   // frontal detector
  std::vector<Box> fallback_detections;  // boosted cascade
};

/// Frontal detections when there are any, else the cascade's, else none.
/// Throws InvalidInputError on a box with non-positive width or height.
std::vector<Box> detector_cascade_select(const DetectionBundle& bundle);

/// One group photo. A modality matrix may be absent when its file is missing.
struct ImageRecord {
  std::string image_id;
  std::array<std::optional<FeatureMatrix>, kNumModalities> faces;
  std::optional<ClassScores> fullimage_score;
  std::optional<Label> gold_label;

  const std::optional<FeatureMatrix>& modality(Modality m) const { return faces[modality_index(m)]; }
  /// Face count shared by the present modalities; 0 when none is present.
  std::size_t n_faces() const;
  /// Throws InvalidInputError on inconsistent face counts, mismatched
  /// modalities or a full-image score that is not a distribution.
  void validate() const;
};

struct SlotScore {
  SlotId id;
  ClassScores scores;
};

/// Every score the record supports, regardless of weights and routing:
/// forest slots on aggregated faces when n_faces >= 1 and the modality is
/// present, plus the full-image score when present.
std::vector<SlotScore> slot_scores(const ImageRecord& record, const EnsembleModel& model);

struct WeightedScore {
  ClassScores scores;
  double weight = 0.0;
};

/// Weighted sum of score vectors, renormalized to total mass 1. Entries with
/// zero weight are skipped entirely. Throws NoUsablePredictorError when no
/// entry has a positive weight and InvalidInputError on a malformed entry.
ClassScores fuse(std::span<const WeightedScore> scores);

struct Classification {
  Label label = Label::kPositive;
  ClassScores fused{};
  std::vector<SlotId> slots_used;
};

/// Records with faces fuse every available positively weighted slot (the
/// full-image slot only in kAlways mode). Records without faces are decided
/// by the full-image score alone; UnclassifiableRecordError when it is absent.
Classification classify_image(const ImageRecord& record, const EnsembleModel& model);

struct SlotAccuracy {
  std::size_t correct = 0;
  std::size_t scored = 0;
  double accuracy() const { return scored == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(scored); }
};

struct WeightEstimate {
  std::array<SlotAccuracy, kNumSlots> per_slot{};
  SlotWeights weights{};
};

/// Scores every labeled record with every slot on its own. Unlabeled records
/// are ignored; InvalidInputError when none is labeled. Slots that scored no
/// record get weight 0. Weights are not renormalized.
WeightEstimate estimate_weights(const EnsembleModel& model, std::span<const ImageRecord> records,
                                WeightPolicy policy = WeightPolicy::kAccuracy);

using ConfusionCounts = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

/// Rows are gold classes, columns predicted classes.
struct EvalReport {
  double accuracy = 0.0;
  std::array<double, kNumClasses> per_class_recall{};  // 0 for classes absent from gold
  ConfusionCounts confusion{};
  std::array<std::array<double, kNumClasses>, kNumClasses> confusion_normalized{};
  std::size_t n_images = 0;
  std::size_t n_noface_images = 0;
};

/// Throws InvalidInputError on empty or unequal-length input.
EvalReport evaluate(std::span<const Label> predictions, std::span<const Label> gold);

}  // namespace gaffect
