#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string_view>

#include "gaffect/ensemble.hpp"
#include "gaffect/forest.hpp"
#include "gaffect/synth.hpp"

namespace gaffect {

/// Pipeline settings. JSON layout:
///
///   {"forest": {"n_trees": 100, "max_depth": null, "min_samples_leaf": 1,
///               "mtry": null, "bootstrap": true, "seed": 0},
///    "slot_forest": {"rf_landmarks": {"n_trees": 200}},
///    "threads": 0,
///    "fusion": {"weight_policy": "accuracy", "fullimage_mode": "always",
///               "aggregate": "median", "weights": {"rf_fc7_rgb": 0.6762, ...}},
///    "synth": {"profile": "standard", "n_train": 600, ...}}
///
/// Every key is optional. Slot overrides are merged over "forest".
struct PipelineConfig {
  ForestParams forest;
  std::array<std::optional<ForestParams>, kNumModalities> slot_forest;
  unsigned threads = 0;
  FullImageMode fullimage_mode = FullImageMode::kAlways;
  Aggregation aggregation = Aggregation::kMedian;
  WeightPolicy weight_policy = WeightPolicy::kAccuracy;
  std::optional<SlotWeights> initial_weights;
  SynthConfig synth;

  ForestParams forest_for(Modality modality) const;
};

/// Throws InvalidInputError on unknown enum values or malformed JSON.
PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace gaffect
