#include <fstream>
#include <set>

#include "gaffect/error.hpp"
#include "gaffect/io.hpp"
#include "json.hpp"

namespace gaffect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kManifestFormat = "gaffect-manifest";

std::string required_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw InvalidInputError(where + ": missing string field '" + key + "'");
  }
  return obj.at(key).get<std::string>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string relative_to(const fs::path& base, const fs::path& p) {
  const fs::path abs = fs::absolute(p).lexically_normal();
  const fs::path rel = abs.lexically_relative(fs::absolute(base).lexically_normal());
  return rel.empty() ? abs.generic_string() : rel.generic_string();
}

}  // namespace

std::string_view split_name(DataSplit split) {
  switch (split) {
    case DataSplit::kTrain:
      return "train";
    case DataSplit::kValidation:
      return "validation";
    case DataSplit::kTest:
      return "test";
  }
  return "train";
}

std::optional<DataSplit> parse_split(std::string_view name) {
  if (name == "train") return DataSplit::kTrain;
  if (name == "validation") return DataSplit::kValidation;
  if (name == "test") return DataSplit::kTest;
  return std::nullopt;
}

Manifest load_manifest(const fs::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(ParseError::Reason::kSyntax, path.string(), 0, e.what());
  }
  const std::string where = path.string();
  if (!doc.is_object() || doc.value("format", "") != kManifestFormat) {
    throw InvalidInputError(where + ": not a gaffect manifest");
  }
  if (!doc.contains("version") || doc.at("version") != kManifestFormatVersion) {
    throw InvalidInputError(where + ": unsupported manifest version");
  }
  Manifest manifest;
  const std::string split = required_string(doc, "split", where);
  const auto parsed_split = parse_split(split);
  if (!parsed_split) throw InvalidInputError(where + ": unknown split '" + split + "'");
  manifest.split = *parsed_split;
  if (!doc.contains("entries") || !doc.at("entries").is_array()) {
    throw InvalidInputError(where + ": missing 'entries' array");
  }

  const fs::path base = path.parent_path();
  std::set<std::string> seen;
  for (const json& item : doc.at("entries")) {
    if (!item.is_object()) throw InvalidInputError(where + ": entries must be objects");
    ManifestEntry entry;
    entry.image_id = required_string(item, "image_id", where);
    const std::string here = where + " [" + entry.image_id + "]";
    if (!seen.insert(entry.image_id).second) {
      throw InvalidInputError(where + ": duplicate image_id '" + entry.image_id + "'");
    }
    if (item.contains("label") && !item.at("label").is_null()) {
      const std::string label = required_string(item, "label", here);
      entry.gold_label = parse_label(label);
      if (!entry.gold_label) throw InvalidInputError(here + ": unknown label '" + label + "'");
    } else if (manifest.split != DataSplit::kTest) {
      throw InvalidInputError(here + ": " + split + " entries need a label");
    }
    if (item.contains("features")) {
      const json& features = item.at("features");
      if (!features.is_object()) throw InvalidInputError(here + ": 'features' must be an object");
      for (const auto& [name, value] : features.items()) {
        const auto modality = parse_modality(name);
        if (!modality) throw InvalidInputError(here + ": unknown modality '" + name + "'");
        if (!value.is_string()) throw InvalidInputError(here + ": feature paths must be strings");
        entry.features[modality_index(*modality)] = resolve(base, value.get<std::string>());
      }
    }
    if (item.contains("fullimage_score") && !item.at("fullimage_score").is_null()) {
      entry.fullimage_score = resolve(base, required_string(item, "fullimage_score", here));
    }
    if (strict) {
      for (const auto& p : entry.features) {
        if (p && !fs::exists(*p)) throw InvalidInputError(here + ": missing file " + p->string());
      }
      if (entry.fullimage_score && !fs::exists(*entry.fullimage_score)) {
        throw InvalidInputError(here + ": missing file " + entry.fullimage_score->string());
      }
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  const fs::path base = path.parent_path();
  json entries = json::array();
  for (const ManifestEntry& entry : manifest.entries) {
    json item;
    item["image_id"] = entry.image_id;
    if (entry.gold_label) item["label"] = std::string(label_name(*entry.gold_label));
    json features = json::object();
    for (Modality m : kAllModalities) {
      if (const auto& p = entry.features[modality_index(m)]) features[std::string(modality_name(m))] = relative_to(base, *p);
    }
    item["features"] = std::move(features);
    if (entry.fullimage_score) item["fullimage_score"] = relative_to(base, *entry.fullimage_score);
    entries.push_back(std::move(item));
  }
  const json doc = {{"format", kManifestFormat},
                    {"version", kManifestFormatVersion},
                    {"split", std::string(split_name(manifest.split))},
                    {"entries", std::move(entries)}};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInputError("cannot open " + path.string() + " for writing");
  out << doc.dump(1) << '\n';
}

std::vector<ImageRecord> load_records(const Manifest& manifest) {
  std::vector<ImageRecord> records;
  records.reserve(manifest.entries.size());
  for (const ManifestEntry& entry : manifest.entries) {
    ImageRecord record;
    record.image_id = entry.image_id;
    record.gold_label = entry.gold_label;
    for (Modality m : kAllModalities) {
      const auto& p = entry.features[modality_index(m)];
      if (!p || !fs::exists(*p)) continue;
      FeatureMatrix matrix = load_feature_file(*p, entry.image_id);
      if (matrix.modality() != m) {
        throw InvalidInputError(p->string() + ": file holds " + std::string(modality_name(matrix.modality())) +
                                " features but is listed as " + std::string(modality_name(m)));
      }
      record.faces[modality_index(m)] = std::move(matrix);
    }
    if (entry.fullimage_score && fs::exists(*entry.fullimage_score)) {
      record.fullimage_score = load_score_file(*entry.fullimage_score);
    }
    record.validate();
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace gaffect
