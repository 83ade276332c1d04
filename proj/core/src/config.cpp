#include "gaffect/config.hpp"

#include <fstream>
#include <iterator>

#include "gaffect/error.hpp"
#include "json.hpp"

namespace gaffect {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInputError(std::string("config: invalid value for '") + key + "'");
  }
}

void read_optional(const json& obj, const char* key, std::optional<std::size_t>& out) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    out.reset();
    return;
  }
  std::size_t v = 0;
  read(obj, key, v);
  out = v;
}

ForestParams merge_forest(ForestParams params, const json& obj) {
  if (!obj.is_object()) throw InvalidInputError("config: forest settings must be an object");
  read(obj, "n_trees", params.n_trees);
  read_optional(obj, "max_depth", params.max_depth);
  read(obj, "min_samples_leaf", params.min_samples_leaf);
  read_optional(obj, "mtry", params.mtry);
  read(obj, "bootstrap", params.bootstrap);
  read(obj, "seed", params.seed);
  return params;
}

template <typename Parse>
auto read_enum(const json& obj, const char* key, Parse parse) {
  std::string name;
  read(obj, key, name);
  const auto parsed = parse(name);
  if (!parsed) throw InvalidInputError(std::string("config: unknown ") + key + " '" + name + "'");
  return *parsed;
}

}  // namespace

ForestParams PipelineConfig::forest_for(Modality modality) const {
  const auto& over = slot_forest[modality_index(modality)];
  ForestParams params = over ? *over : forest;
  // One seed per forest so the five forests draw independent streams.
  params.seed ^= CounterRng::mix(0xF0F0F0F0ULL + modality_index(modality));
  return params;
}

PipelineConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInputError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidInputError("config: top level must be an object");

  PipelineConfig config;
  if (doc.contains("forest")) config.forest = merge_forest(config.forest, doc.at("forest"));
  if (doc.contains("slot_forest")) {
    for (const auto& [name, value] : doc.at("slot_forest").items()) {
      const auto id = parse_slot(name);
      if (!id || !slot_modality(*id)) throw InvalidInputError("config: unknown forest slot '" + name + "'");
      config.slot_forest[modality_index(*slot_modality(*id))] = merge_forest(config.forest, value);
    }
  }
  read(doc, "threads", config.threads);

  if (doc.contains("fusion")) {
    const json& fusion = doc.at("fusion");
    if (fusion.contains("weight_policy")) config.weight_policy = read_enum(fusion, "weight_policy", parse_weight_policy);
    if (fusion.contains("fullimage_mode")) {
      config.fullimage_mode = read_enum(fusion, "fullimage_mode", parse_full_image_mode);
    }
    if (fusion.contains("aggregate")) config.aggregation = read_enum(fusion, "aggregate", parse_aggregation);
    if (fusion.contains("weights")) {
      SlotWeights weights{};
      for (const auto& [name, value] : fusion.at("weights").items()) {
        const auto id = parse_slot(name);
        if (!id || !value.is_number()) throw InvalidInputError("config: bad weight entry '" + name + "'");
        weights[slot_index(*id)] = value.get<double>();
      }
      config.initial_weights = weights;
    }
  }

  if (doc.contains("synth")) {
    const json& s = doc.at("synth");
    if (s.contains("profile")) {
      config.synth = read_enum(s, "profile", synth_profile);
    }
    SynthConfig& c = config.synth;
    read(s, "n_train", c.n_train);
    read(s, "n_validation", c.n_validation);
    read(s, "min_faces", c.min_faces);
    read(s, "max_faces", c.max_faces);
    read(s, "noface_fraction", c.noface_fraction);
    read(s, "latent_dim", c.latent_dim);
    read(s, "class_separation", c.class_separation);
    read(s, "image_noise", c.image_noise);
    read(s, "face_noise", c.face_noise);
    read(s, "modality_noise", c.modality_noise);
    read(s, "embedding_noise", c.embedding_noise);
    read(s, "landmark_displacement", c.landmark_displacement);
    read(s, "landmark_jitter", c.landmark_jitter);
    read(s, "fullimage_noise", c.fullimage_noise);
    read(s, "outlier_probability", c.outlier_probability);
    read(s, "outlier_scale", c.outlier_scale);
    read(s, "significant_digits", c.significant_digits);
    read(s, "seed", c.seed);
  }
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

}  // namespace gaffect
