#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "doctest.h"
#include "gaffect/cli.hpp"
#include "gaffect/io.hpp"
#include "temp_dir.hpp"

using namespace gaffect;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli_run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Single-tree forest that always votes `counts`.
RandomForestModel constant_forest(Modality m, ClassCounts counts) {
  RandomForestModel model;
  model.modality = m;
  model.feature_dim = modality_dim(m);
  model.params.n_trees = 1;
  model.params.mtry = 1;
  TreeNode leaf;
  leaf.counts = counts;
  model.trees.emplace_back(std::vector<TreeNode>{leaf});
  return model;
}

// Four images whose predictions are forced:
//   a  gold Positive, faces, forests vote Neutral          -> Neutral
//   b  gold Neutral,  faces, forests vote Neutral          -> Neutral
//   c  gold Negative, no faces, full image [0.1 0.2 0.7]   -> Negative
//   d  gold Positive, no faces, full image [0.2 0.1 0.7]   -> Negative
void write_four_image_fixture(const TempDir& dir) {
  std::array<WeakPredictorSlot, kNumSlots> slots;
  for (std::size_t i = 0; i < kNumSlots; ++i) {
    slots[i].id = kAllSlots[i];
    slots[i].weight = 1.0;
    if (auto m = slot_modality(kAllSlots[i])) slots[i].model = constant_forest(*m, {0, 3, 1});
  }
  save_bundle(dir / "bundle", Bundle{EnsembleModel(slots), WeightPolicy::kAccuracy, std::nullopt});

  Manifest manifest;
  manifest.split = DataSplit::kValidation;
  const std::array<std::pair<const char*, Label>, 4> images = {
      {{"a", Label::kPositive}, {"b", Label::kNeutral}, {"c", Label::kNegative}, {"d", Label::kPositive}}};
  for (const auto& [id, gold] : images) {
    ManifestEntry e;
    e.image_id = id;
    e.gold_label = gold;
    const bool has_faces = std::string(id) == "a" || std::string(id) == "b";
    for (Modality m : kAllModalities) {
      FeatureMatrix matrix(id, m);
      if (has_faces) matrix.append_row(std::vector<double>(modality_dim(m), 0.5));
      const auto path = dir / ("features/" + std::string(id) + "." + std::string(modality_name(m)) + ".txt");
      std::filesystem::create_directories(path.parent_path());
      write_feature_file(path, matrix);
      e.features[modality_index(m)] = path;
    }
    if (!has_faces) {
      e.fullimage_score = dir / ("scores/" + std::string(id) + ".txt");
      std::filesystem::create_directories(e.fullimage_score->parent_path());
      write_score_file(*e.fullimage_score,
                       std::string(id) == "c" ? ClassScores{0.1, 0.2, 0.7} : ClassScores{0.2, 0.1, 0.7});
    }
    manifest.entries.push_back(e);
  }
  write_manifest(dir / "val.json", manifest);
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"train"}).code == kExitUsage);
  CHECK(run({"eval", "--manifest", "m.json", "--bundle", "b", "--aggregate", "mode"}).code == kExitUsage);
  CHECK(run({"synth"}).code == kExitUsage);
  const auto help = run({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("train") != std::string::npos);
}

TEST_CASE("predict without a bundle is a model error") {
  TempDir dir("cli_nobundle");
  write_four_image_fixture(dir);
  const auto r = run({"predict", "--manifest", (dir / "val.json").string(), "--bundle", (dir / "absent").string()});
  CHECK(r.code == kExitModel);
  CHECK(r.err.find("gaffect: ") == 0);
}

TEST_CASE("bad data exits with 2") {
  TempDir dir("cli_baddata");
  write_four_image_fixture(dir);
  std::ofstream(dir / "features/a.fc7_rgb.txt") << "gaffect-features v1 modality=fc7_rgb dim=4096\n1 2 3\n";
  const auto r = run({"eval", "--manifest", (dir / "val.json").string(), "--bundle", (dir / "bundle").string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("a.fc7_rgb.txt:2") != std::string::npos);
  CHECK(run({"eval", "--manifest", (dir / "missing.json").string(), "--bundle", (dir / "bundle").string()}).code ==
        kExitData);
}

TEST_CASE("eval on the four-image fixture") {
  TempDir dir("cli_eval");
  write_four_image_fixture(dir);
  const std::string report_path = (dir / "out/report.json").string();
  const auto r = run({"eval", "--manifest", (dir / "val.json").string(), "--bundle", (dir / "bundle").string(),
                      "--report", report_path});
  REQUIRE(r.code == kExitOk);
  const auto report = nlohmann::json::parse(slurp(report_path));
  const nlohmann::json expected_confusion = {{0, 1, 1}, {0, 1, 0}, {0, 0, 1}};
  CHECK(report["confusion"] == expected_confusion);
  CHECK(report["accuracy"].get<double>() == 0.5);
  CHECK(report["accuracy_display"] == "0.5000");
  CHECK(report["per_class_recall"] == nlohmann::json({{"Positive", 0.0}, {"Neutral", 1.0}, {"Negative", 1.0}}));
  CHECK(report["n_images"] == 4);
  CHECK(report["n_noface_images"] == 2);
  CHECK(std::filesystem::exists(dir / "out/report.txt"));
  CHECK(r.out.find("0.5000") != std::string::npos);

  const auto predict = run({"predict", "--manifest", (dir / "val.json").string(), "--bundle", (dir / "bundle").string()});
  REQUIRE(predict.code == kExitOk);
  CHECK(predict.out.find("image_id,label,p_positive,p_neutral,p_negative,n_faces,slots\n") == 0);
  CHECK(predict.out.find("\nc,Negative,0.1,0.2,0.7,0,fullimage_cnn\n") != std::string::npos);
  CHECK(predict.out.find("\na,Neutral,0,0.75,0.25,1,") != std::string::npos);

  const auto again = run({"eval", "--manifest", (dir / "val.json").string(), "--bundle", (dir / "bundle").string(),
                          "--report", report_path});
  REQUIRE(again.code == kExitOk);
  CHECK(slurp(report_path) == report.dump(2) + "\n");
}

TEST_CASE("synth, train, weights and eval on a small synthetic set") {
  TempDir dir("cli_smoke");
  std::ofstream(dir / "config.json") << R"({
    "forest": {"n_trees": 15},
    "synth": {"n_train": 45, "n_validation": 30, "seed": 3}
  })";
  const std::string config = (dir / "config.json").string();
  const std::string data = (dir / "data").string();
  const std::string bundle = (dir / "bundle").string();
  const auto synth = run({"synth", "--out", data, "--config", config});
  REQUIRE(synth.code == kExitOk);
  const auto train = run({"train", "--manifest", data + "/train.json", "--bundle", bundle, "--config", config});
  REQUIRE_MESSAGE(train.code == kExitOk, train.err);
  const auto weights =
      run({"weights", "--manifest", data + "/validation.json", "--bundle", bundle, "--config", config});
  REQUIRE_MESSAGE(weights.code == kExitOk, weights.err);
  const auto eval1 = run({"eval", "--manifest", data + "/validation.json", "--bundle", bundle});
  REQUIRE_MESSAGE(eval1.code == kExitOk, eval1.err);
  const std::string first = slurp(std::filesystem::path(bundle) / "report_validation.json");
  const auto eval2 = run({"eval", "--manifest", data + "/validation.json", "--bundle", bundle});
  REQUIRE(eval2.code == kExitOk);
  CHECK(slurp(std::filesystem::path(bundle) / "report_validation.json") == first);
  const auto report = nlohmann::json::parse(first);
  CHECK(report["n_images"] == 30);
  CHECK(report["accuracy"].get<double>() > 0.5);

  // Retraining with the same seed reproduces the bundle byte for byte.
  const std::string bundle2 = (dir / "bundle2").string();
  REQUIRE(run({"train", "--manifest", data + "/train.json", "--bundle", bundle2, "--config", config}).code == kExitOk);
  for (Modality m : kAllModalities) {
    const std::string name = "rf_" + std::string(modality_name(m)) + ".forest";
    CHECK(slurp(std::filesystem::path(bundle) / name) == slurp(std::filesystem::path(bundle2) / name));
  }
}
