#include <fstream>
#include <sstream>

#include "gaffect/error.hpp"
#include "gaffect/io.hpp"
#include "json.hpp"

namespace gaffect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kBundleFormat = "gaffect-bundle";

std::string forest_file(SlotId id) { return std::string(slot_name(id)) + ".forest"; }

template <typename T>
T field(const json& obj, const char* key) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ModelError(std::string("bundle document: missing or invalid '") + key + "'");
  }
}

}  // namespace

void save_bundle(const fs::path& dir, const Bundle& bundle) {
  fs::create_directories(dir);
  const EnsembleModel& model = bundle.model;
  json slots = json::array();
  for (SlotId id : kAllSlots) {
    const WeakPredictorSlot& slot = model.slot(id);
    json s;
    s["id"] = std::string(slot_name(id));
    s["weight"] = slot.weight;
    if (slot_kind(id) == SlotKind::kForest) {
      s["kind"] = "forest";
      s["model"] = forest_file(id);
      s["training_fingerprint"] = slot.model->training_fingerprint;
      save_forest(dir / forest_file(id), *slot.model);
    } else {
      s["kind"] = "external_score";
    }
    if (bundle.validation) {
      const SlotAccuracy& acc = (*bundle.validation)[slot_index(id)];
      s["validation"] = {{"correct", acc.correct}, {"scored", acc.scored}, {"accuracy", acc.accuracy()}};
    }
    slots.push_back(std::move(s));
  }
  const json doc = {{"format", kBundleFormat},
                    {"version", kBundleFormatVersion},
                    {"aggregation", std::string(aggregation_name(model.aggregation()))},
                    {"fullimage_mode", std::string(full_image_mode_name(model.full_image_mode()))},
                    {"weight_policy", std::string(weight_policy_name(bundle.weight_policy))},
                    {"slots", std::move(slots)}};
  std::ofstream out(dir / kBundleDocument, std::ios::trunc);
  if (!out) throw ModelError("cannot write bundle document in " + dir.string());
  out << doc.dump(2) << '\n';
}

Bundle load_bundle(const fs::path& dir) {
  const fs::path doc_path = dir / kBundleDocument;
  if (!fs::exists(doc_path)) throw ModelError("no trained model bundle at " + dir.string());
  std::ifstream in(doc_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError(doc_path.string() + ": " + e.what());
  }
  if (field<std::string>(doc, "format") != kBundleFormat) throw ModelError(doc_path.string() + ": not a bundle");
  if (field<int>(doc, "version") != kBundleFormatVersion) {
    throw ModelError(doc_path.string() + ": unsupported bundle version");
  }
  const auto aggregation = parse_aggregation(field<std::string>(doc, "aggregation"));
  const auto mode = parse_full_image_mode(field<std::string>(doc, "fullimage_mode"));
  const auto policy = parse_weight_policy(field<std::string>(doc, "weight_policy"));
  if (!aggregation || !mode || !policy) throw ModelError(doc_path.string() + ": invalid routing fields");

  const json& slots_doc = doc.at("slots");
  if (!slots_doc.is_array() || slots_doc.size() != kNumSlots) {
    throw ModelError(doc_path.string() + ": expected six slots");
  }
  std::array<WeakPredictorSlot, kNumSlots> slots;
  std::array<SlotAccuracy, kNumSlots> validation{};
  bool has_validation = true;
  for (std::size_t i = 0; i < kNumSlots; ++i) {
    const json& s = slots_doc[i];
    const auto id = parse_slot(field<std::string>(s, "id"));
    if (!id || *id != kAllSlots[i]) throw ModelError(doc_path.string() + ": slots out of order");
    slots[i].id = *id;
    slots[i].weight = field<double>(s, "weight");
    if (slot_kind(*id) == SlotKind::kForest) {
      slots[i].model = load_forest(dir / field<std::string>(s, "model"));
    }
    if (s.contains("validation")) {
      validation[i].correct = field<std::size_t>(s.at("validation"), "correct");
      validation[i].scored = field<std::size_t>(s.at("validation"), "scored");
    } else {
      has_validation = false;
    }
  }
  Bundle bundle{EnsembleModel(std::move(slots), *mode, *aggregation), *policy, std::nullopt};
  if (has_validation) bundle.validation = validation;
  return bundle;
}

std::string report_json(const EvalReport& report, const ReportContext& context) {
  json recall = json::object();
  json confusion = json::array();
  json normalized = json::array();
  for (std::size_t g = 0; g < kNumClasses; ++g) {
    recall[std::string(label_name(label_from_index(g)))] = report.per_class_recall[g];
    confusion.push_back(report.confusion[g]);
    normalized.push_back(report.confusion_normalized[g]);
  }
  json slots = json::array();
  for (SlotId id : kAllSlots) {
    const SlotAccuracy& acc = context.slot_accuracy[slot_index(id)];
    json s = {{"id", std::string(slot_name(id))},
              {"correct", acc.correct},
              {"scored", acc.scored},
              {"accuracy", acc.accuracy()},
              {"accuracy_display", fixed(acc.accuracy())}};
    if (context.model) s["weight"] = context.model->slot(id).weight;
    slots.push_back(std::move(s));
  }
  json doc = {{"format", "gaffect-report"},
              {"version", 1},
              {"split", std::string(split_name(context.split))},
              {"n_images", report.n_images},
              {"n_noface_images", report.n_noface_images},
              {"accuracy", report.accuracy},
              {"accuracy_display", fixed(report.accuracy)},
              {"per_class_recall", std::move(recall)},
              {"class_order", {"Positive", "Neutral", "Negative"}},
              {"confusion", std::move(confusion)},
              {"confusion_normalized", std::move(normalized)},
              {"slots", std::move(slots)}};
  if (context.model) {
    doc["aggregation"] = std::string(aggregation_name(context.model->aggregation()));
    doc["fullimage_mode"] = std::string(full_image_mode_name(context.model->full_image_mode()));
  }
  return doc.dump(2) + "\n";
}

std::string report_table(const EvalReport& report, const ReportContext& context) {
  std::ostringstream out;
  auto pct = [](double v) { return fixed(100.0 * v, 2) + "%"; };
  auto pad = [](std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
  };

  out << "Split: " << split_name(context.split) << "  images: " << report.n_images
      << "  without faces: " << report.n_noface_images << "\n\n";
  out << pad("Method", 34) << pad("Weight", 10) << "Accuracy\n";
  for (SlotId id : kAllSlots) {
    const SlotAccuracy& acc = context.slot_accuracy[slot_index(id)];
    const std::string weight = context.model ? fixed(context.model->slot(id).weight) : "-";
    const std::string accuracy = acc.scored ? pct(acc.accuracy()) + " (" + std::to_string(acc.correct) + "/" +
                                                  std::to_string(acc.scored) + ")"
                                            : "n/a";
    out << pad(std::string(slot_name(id)), 34) << pad(weight, 10) << accuracy << "\n";
  }
  out << pad("Ensemble", 34) << pad("", 10) << pct(report.accuracy) << "\n\n";

  out << "Confusion matrix (rows: gold, columns: predicted)\n";
  out << pad("", 12);
  for (std::size_t p = 0; p < kNumClasses; ++p) out << pad(std::string(label_name(label_from_index(p))), 18);
  out << "Recall\n";
  for (std::size_t g = 0; g < kNumClasses; ++g) {
    out << pad(std::string(label_name(label_from_index(g))), 12);
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      out << pad(fixed(report.confusion_normalized[g][p]) + " (" + std::to_string(report.confusion[g][p]) + ")", 18);
    }
    out << fixed(report.per_class_recall[g]) << "\n";
  }
  out << "\nAccuracy: " << fixed(report.accuracy) << "\n";
  return out.str();
}

}  // namespace gaffect
