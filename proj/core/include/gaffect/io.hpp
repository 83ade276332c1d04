#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gaffect/ensemble.hpp"
#include "gaffect/features.hpp"
#include "gaffect/types.hpp"

namespace gaffect {

// Feature files: one text file per (image, modality).
//
//   gaffect-features v1 modality=<name> dim=<n>
//   <v_1> <v_2> ... <v_n>        one line per detected face
//
// Blank lines and lines starting with '#' are ignored. Values are decimal
// text in the C locale; scientific notation is accepted. A header-only file
// describes an image without faces.
FeatureMatrix parse_feature_text(std::string_view text, const std::string& source,
                                 const std::string& image_id);
FeatureMatrix load_feature_file(const std::filesystem::path& path, const std::string& image_id = {});
/// `significant_digits` rounds values on output; nullopt writes the shortest
/// text that reads back to the same double.
std::string format_feature_text(const FeatureMatrix& matrix,
                                std::optional<int> significant_digits = std::nullopt);
void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& matrix,
                        std::optional<int> significant_digits = std::nullopt);

// Full-image score files hold exactly one row of class probabilities:
//
//   gaffect-score v1 classes=3
//   <p_positive> <p_neutral> <p_negative>
ClassScores parse_score_text(std::string_view text, const std::string& source);
ClassScores load_score_file(const std::filesystem::path& path);
void write_score_file(const std::filesystem::path& path, const ClassScores& scores);

enum class DataSplit { kTrain, kValidation, kTest };

std::string_view split_name(DataSplit split);
std::optional<DataSplit> parse_split(std::string_view name);

struct ManifestEntry {
  std::string image_id;
  std::optional<Label> gold_label;
  std::array<std::optional<std::filesystem::path>, kNumModalities> features;  // resolved paths
  std::optional<std::filesystem::path> fullimage_score;
};

/// JSON document:
///   {"format": "gaffect-manifest", "version": 1, "split": "train",
///    "entries": [{"image_id": "...", "label": "Positive",
///                 "features": {"avgpool_rgb": "relative/or/absolute/path", ...},
///                 "fullimage_score": "path"}]}
/// Relative paths resolve against the manifest's directory.
struct Manifest {
  DataSplit split = DataSplit::kTrain;
  std::vector<ManifestEntry> entries;
};

inline constexpr int kManifestFormatVersion = 1;

/// Throws InvalidInputError on duplicate ids, unknown labels, unlabeled
/// train/validation entries, or (when `strict`) referenced files that do not
/// exist; ParseError on malformed JSON.
Manifest load_manifest(const std::filesystem::path& path, bool strict = false);
/// Paths are written relative to the manifest's directory when possible.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Loads every entry's files. Files that are not listed or do not exist leave
/// that modality (or the full-image score) absent.
std::vector<ImageRecord> load_records(const Manifest& manifest);

// Model bundle directory:
//   bundle.json               weights, routing and per-slot metadata
//   rf_<modality>.forest      one binary forest per face modality
inline constexpr int kBundleFormatVersion = 1;
inline constexpr std::string_view kBundleDocument = "bundle.json";

struct Bundle {
  EnsembleModel model;
  WeightPolicy weight_policy = WeightPolicy::kAccuracy;
  std::optional<std::array<SlotAccuracy, kNumSlots>> validation;  // set by weight estimation
};

void save_bundle(const std::filesystem::path& dir, const Bundle& bundle);
/// Throws ModelError when the directory, document or any forest is missing or invalid.
Bundle load_bundle(const std::filesystem::path& dir);

struct ReportContext {
  DataSplit split = DataSplit::kValidation;
  const EnsembleModel* model = nullptr;
  std::array<SlotAccuracy, kNumSlots> slot_accuracy{};
};

/// Deterministic JSON rendering of an evaluation.
std::string report_json(const EvalReport& report, const ReportContext& context);
/// Human-readable method/accuracy table plus confusion matrix.
std::string report_table(const EvalReport& report, const ReportContext& context);

/// Number with exactly `decimals` digits after the point, C locale.
std::string fixed(double value, int decimals = 4);

}  // namespace gaffect
