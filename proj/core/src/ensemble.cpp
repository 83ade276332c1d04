#include "gaffect/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaffect/error.hpp"

namespace gaffect {

namespace {

constexpr std::array<std::string_view, kNumSlots> kSlotNames = {
    "rf_avgpool_rgb", "rf_avgpool_bgr", "rf_fc7_rgb", "rf_fc7_bgr", "rf_landmarks", "fullimage_cnn"};

constexpr double kSoftmaxTemperature = 0.05;
constexpr double kDistributionTolerance = 1e-6;

void check_distribution(const ClassScores& scores, std::string_view what) {
  double sum = 0.0;
  for (double v : scores) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw InvalidInputError(std::string(what) + ": scores must lie in [0, 1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    throw InvalidInputError(std::string(what) + ": scores must sum to 1");
  }
}

void check_weights(const SlotWeights& weights) {
  bool any_positive = false;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ModelError("slot weights must be finite and non-negative");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw ModelError("at least one slot weight must be positive");
}

}  // namespace

std::string_view slot_name(SlotId id) { return kSlotNames.at(slot_index(id)); }

std::optional<SlotId> parse_slot(std::string_view name) {
  for (std::size_t i = 0; i < kNumSlots; ++i) {
    if (kSlotNames[i] == name) return kAllSlots[i];
  }
  return std::nullopt;
}

SlotKind slot_kind(SlotId id) {
  return id == SlotId::kFullImage ? SlotKind::kExternalScore : SlotKind::kForest;
}

std::optional<Modality> slot_modality(SlotId id) {
  if (id == SlotId::kFullImage) return std::nullopt;
  return kAllModalities[slot_index(id)];
}

SlotId slot_for(Modality modality) { return kAllSlots[modality_index(modality)]; }

std::string_view full_image_mode_name(FullImageMode mode) {
  return mode == FullImageMode::kAlways ? "always" : "fallback_only";
}

std::optional<FullImageMode> parse_full_image_mode(std::string_view name) {
  if (name == "always") return FullImageMode::kAlways;
  if (name == "fallback_only") return FullImageMode::kFallbackOnly;
  return std::nullopt;
}

std::string_view weight_policy_name(WeightPolicy policy) {
  switch (policy) {
    case WeightPolicy::kAccuracy:
      return "accuracy";
    case WeightPolicy::kAccuracyMinusChance:
      return "accuracy_minus_chance";
    case WeightPolicy::kSoftmax:
      return "softmax";
  }
  return "accuracy";
}

std::optional<WeightPolicy> parse_weight_policy(std::string_view name) {
  if (name == "accuracy") return WeightPolicy::kAccuracy;
  if (name == "accuracy_minus_chance") return WeightPolicy::kAccuracyMinusChance;
  if (name == "softmax") return WeightPolicy::kSoftmax;
  return std::nullopt;
}

EnsembleModel::EnsembleModel(std::array<WeakPredictorSlot, kNumSlots> slots, FullImageMode full_image_mode,
                             Aggregation aggregation)
    : slots_(std::move(slots)), full_image_mode_(full_image_mode), aggregation_(aggregation) {
  for (std::size_t i = 0; i < kNumSlots; ++i) {
    const WeakPredictorSlot& slot = slots_[i];
    if (slot.id != kAllSlots[i]) throw ModelError("ensemble slots out of order or duplicated");
    if (slot_kind(slot.id) == SlotKind::kForest) {
      if (!slot.model) throw ModelError(std::string(slot_name(slot.id)) + " has no forest");
      if (slot.model->modality != *slot_modality(slot.id)) {
        throw ModelError(std::string(slot_name(slot.id)) + " holds a forest of another modality");
      }
    } else if (slot.model) {
      throw ModelError("the full-image slot cannot hold a forest");
    }
  }
  check_weights(weights());
}

SlotWeights EnsembleModel::weights() const {
  SlotWeights w{};
  for (std::size_t i = 0; i < kNumSlots; ++i) w[i] = slots_[i].weight;
  return w;
}

EnsembleModel EnsembleModel::with_weights(const SlotWeights& weights) const {
  auto slots = slots_;
  for (std::size_t i = 0; i < kNumSlots; ++i) slots[i].weight = weights[i];
  return EnsembleModel(std::move(slots), full_image_mode_, aggregation_);
}

EnsembleModel EnsembleModel::with_full_image_mode(FullImageMode mode) const {
  return EnsembleModel(slots_, mode, aggregation_);
}

EnsembleModel EnsembleModel::with_aggregation(Aggregation aggregation) const {
  return EnsembleModel(slots_, full_image_mode_, aggregation);
}

std::vector<Box> detector_cascade_select(const DetectionBundle& bundle) {
  for (const auto* list : {&bundle.primary_detections, &bundle.fallback_detections}) {
    for (const Box& b : *list) {
      if (!(b.width > 0.0) || !(b.height > 0.0)) {
        throw InvalidInputError("face boxes need positive width and height");
      }
    }
  }
  return bundle.primary_detections.empty() ? bundle.fallback_detections : bundle.primary_detections;
}

std::size_t ImageRecord::n_faces() const {
  for (const auto& m : faces) {
    if (m) return m->rows();
  }
  return 0;
}

void ImageRecord::validate() const {
  std::optional<std::size_t> rows;
  for (std::size_t i = 0; i < kNumModalities; ++i) {
    if (!faces[i]) continue;
    if (faces[i]->modality() != kAllModalities[i]) {
      throw InvalidInputError(image_id + ": modality matrix stored in the wrong slot");
    }
    if (rows && *rows != faces[i]->rows()) {
      throw InvalidInputError(image_id + ": face counts differ across modalities");
    }
    rows = faces[i]->rows();
  }
  if (fullimage_score) check_distribution(*fullimage_score, image_id + " full-image score");
}

std::vector<SlotScore> slot_scores(const ImageRecord& record, const EnsembleModel& model) {
  record.validate();
  std::vector<SlotScore> out;
  if (record.n_faces() > 0) {
    for (Modality m : kAllModalities) {
      const auto& faces = record.modality(m);
      if (!faces) continue;
      const SlotId id = slot_for(m);
      const FeatureVector pooled = aggregate(*faces, model.aggregation());
      out.push_back({id, model.slot(id).model->predict_proba(pooled.values)});
    }
  }
  if (record.fullimage_score) out.push_back({SlotId::kFullImage, *record.fullimage_score});
  return out;
}

ClassScores fuse(std::span<const WeightedScore> scores) {
  ClassScores sum{};
  bool any = false;
  for (const WeightedScore& entry : scores) {
    if (!std::isfinite(entry.weight) || entry.weight < 0.0) {
      throw InvalidInputError("fusion weights must be finite and non-negative");
    }
    check_distribution(entry.scores, "fusion input");
    if (entry.weight == 0.0) continue;
    any = true;
    for (std::size_t c = 0; c < kNumClasses; ++c) sum[c] += entry.weight * entry.scores[c];
  }
  if (!any) throw NoUsablePredictorError("no predictor with a positive weight");
  const double mass = sum[0] + sum[1] + sum[2];
  for (auto& v : sum) v = std::clamp(v / mass, 0.0, 1.0);
  return sum;
}

Classification classify_image(const ImageRecord& record, const EnsembleModel& model) {
  record.validate();
  Classification result;
  if (record.n_faces() == 0) {
    if (!record.fullimage_score) {
      throw UnclassifiableRecordError(record.image_id + ": no faces and no full-image score");
    }
    const ClassScores& score = *record.fullimage_score;
    const double mass = score[0] + score[1] + score[2];
    for (std::size_t c = 0; c < kNumClasses; ++c) result.fused[c] = score[c] / mass;
    result.label = label_from_index(argmax(score));
    result.slots_used = {SlotId::kFullImage};
    return result;
  }

  std::vector<WeightedScore> weighted;
  for (const SlotScore& s : slot_scores(record, model)) {
    const double weight = model.slot(s.id).weight;
    if (weight == 0.0) continue;
    if (s.id == SlotId::kFullImage && model.full_image_mode() == FullImageMode::kFallbackOnly) continue;
    weighted.push_back({s.scores, weight});
    result.slots_used.push_back(s.id);
  }
  if (weighted.empty()) {
    throw NoUsablePredictorError(record.image_id + ": no positively weighted slot can score this image");
  }
  result.fused = fuse(weighted);
  result.label = label_from_index(argmax(result.fused));
  return result;
}

WeightEstimate estimate_weights(const EnsembleModel& model, std::span<const ImageRecord> records,
                                WeightPolicy policy) {
  WeightEstimate out;
  bool any_labeled = false;
  for (const ImageRecord& record : records) {
    if (!record.gold_label) continue;
    any_labeled = true;
    const std::size_t gold = label_index(*record.gold_label);
    for (const SlotScore& s : slot_scores(record, model)) {
      SlotAccuracy& acc = out.per_slot[slot_index(s.id)];
      ++acc.scored;
      if (argmax(s.scores) == gold) ++acc.correct;
    }
  }
  if (!any_labeled) throw InvalidInputError("weight estimation needs labeled validation records");

  double softmax_mass = 0.0;
  for (std::size_t i = 0; i < kNumSlots; ++i) {
    const SlotAccuracy& acc = out.per_slot[i];
    if (acc.scored == 0) continue;
    switch (policy) {
      case WeightPolicy::kAccuracy:
        out.weights[i] = acc.accuracy();
        break;
      case WeightPolicy::kAccuracyMinusChance:
        out.weights[i] = std::max(0.0, acc.accuracy() - 1.0 / static_cast<double>(kNumClasses));
        break;
      case WeightPolicy::kSoftmax:
        out.weights[i] = std::exp(acc.accuracy() / kSoftmaxTemperature);
        softmax_mass += out.weights[i];
        break;
    }
  }
  if (policy == WeightPolicy::kSoftmax && softmax_mass > 0.0) {
    for (auto& w : out.weights) w /= softmax_mass;
  }
  return out;
}

EvalReport evaluate(std::span<const Label> predictions, std::span<const Label> gold) {
  if (predictions.empty()) throw InvalidInputError("cannot evaluate zero predictions");
  if (predictions.size() != gold.size()) {
    throw InvalidInputError("prediction and gold label counts differ");
  }
  EvalReport report;
  report.n_images = predictions.size();
  std::size_t trace = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::size_t g = label_index(gold[i]);
    const std::size_t p = label_index(predictions[i]);
    ++report.confusion[g][p];
    if (g == p) ++trace;
  }
  report.accuracy = static_cast<double>(trace) / static_cast<double>(report.n_images);
  for (std::size_t g = 0; g < kNumClasses; ++g) {
    const std::size_t row = std::accumulate(report.confusion[g].begin(), report.confusion[g].end(),
                                            std::size_t{0});
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      report.confusion_normalized[g][p] =
          row == 0 ? 0.0 : static_cast<double>(report.confusion[g][p]) / static_cast<double>(row);
    }
    report.per_class_recall[g] = report.confusion_normalized[g][g];
  }
  return report;
}

}  // namespace gaffect
