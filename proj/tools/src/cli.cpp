#include "gaffect/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "gaffect/config.hpp"
#include "gaffect/ensemble.hpp"
#include "gaffect/error.hpp"
#include "gaffect/forest.hpp"
#include "gaffect/io.hpp"
#include "gaffect/synth.hpp"

namespace gaffect {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string manifest;
  std::string bundle;
  std::string config;
  std::string out;
  std::string report;
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool strict = false;
  std::string fullimage_mode;
  std::string aggregate;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

PipelineConfig effective_config(const Options& opt) {
  PipelineConfig config = opt.config.empty() ? PipelineConfig{} : load_config(opt.config);
  if (!opt.profile.empty()) {
    const auto profile = synth_profile(opt.profile);
    if (!profile) throw UsageError("unknown synth profile '" + opt.profile + "'");
    config.synth = *profile;
  }
  if (opt.seed) {
    config.forest.seed = *opt.seed;
    for (auto& slot : config.slot_forest) {
      if (slot) slot->seed = *opt.seed;
    }
    config.synth.seed = *opt.seed;
  }
  if (opt.threads) config.threads = *opt.threads;
  if (!opt.fullimage_mode.empty()) config.fullimage_mode = *parse_full_image_mode(opt.fullimage_mode);
  if (!opt.aggregate.empty()) config.aggregation = *parse_aggregation(opt.aggregate);
  return config;
}

// Bundle with any routing overrides given on the command line.
Bundle open_bundle(const Options& opt) {
  Bundle bundle = load_bundle(opt.bundle);
  if (!opt.fullimage_mode.empty()) {
    bundle.model = bundle.model.with_full_image_mode(*parse_full_image_mode(opt.fullimage_mode));
  }
  if (!opt.aggregate.empty()) bundle.model = bundle.model.with_aggregation(*parse_aggregation(opt.aggregate));
  return bundle;
}

int run_synth(const Options& opt, std::ostream& out) {
  if (opt.out.empty()) throw UsageError("synth needs --out DIR");
  const PipelineConfig config = effective_config(opt);
  const SynthSummary summary = generate_synthetic(config.synth, opt.out);
  out << "wrote " << summary.train_images << " train and " << summary.validation_images
      << " validation images (" << summary.noface_images << " without faces)\n"
      << "  " << summary.train_manifest.string() << "\n  " << summary.validation_manifest.string() << "\n";
  return kExitOk;
}

int run_train(const Options& opt, std::ostream& out) {
  const PipelineConfig config = effective_config(opt);
  const Manifest manifest = load_manifest(opt.manifest, opt.strict);
  const std::vector<ImageRecord> records = load_records(manifest);

  std::array<WeakPredictorSlot, kNumSlots> slots;
  for (SlotId id : kAllSlots) slots[slot_index(id)].id = id;
  for (Modality m : kAllModalities) {
    LabeledDataset dataset(modality_dim(m));
    for (const ImageRecord& record : records) {
      const auto& faces = record.modality(m);
      if (!record.gold_label || !faces || faces->rows() == 0) continue;
      dataset.add(aggregate(*faces, config.aggregation).values, *record.gold_label);
    }
    if (dataset.empty()) {
      throw InvalidInputError("no labeled training images with " + std::string(modality_name(m)) + " faces");
    }
    RandomForestModel forest = train_forest(dataset, config.forest_for(m), m, TrainOptions{config.threads});
    out << slot_name(slot_for(m)) << ": " << forest.trees.size() << " trees on " << dataset.size()
        << " images (mtry " << *forest.params.mtry << ")\n";
    slots[slot_index(slot_for(m))].model = std::move(forest);
  }
  const SlotWeights weights = config.initial_weights.value_or(SlotWeights{1, 1, 1, 1, 1, 1});
  for (std::size_t i = 0; i < kNumSlots; ++i) slots[i].weight = weights[i];

  Bundle bundle{EnsembleModel(std::move(slots), config.fullimage_mode, config.aggregation),
                config.weight_policy, std::nullopt};
  save_bundle(opt.bundle, bundle);
  out << "bundle written to " << opt.bundle << "\n";
  return kExitOk;
}

int run_weights(const Options& opt, std::ostream& out) {
  Bundle bundle = open_bundle(opt);
  if (!opt.config.empty()) bundle.weight_policy = load_config(opt.config).weight_policy;
  const Manifest manifest = load_manifest(opt.manifest, opt.strict);
  const std::vector<ImageRecord> records = load_records(manifest);
  const WeightEstimate estimate = estimate_weights(bundle.model, records, bundle.weight_policy);
  bundle.model = bundle.model.with_weights(estimate.weights);
  bundle.validation = estimate.per_slot;
  save_bundle(opt.bundle, bundle);
  for (SlotId id : kAllSlots) {
    const SlotAccuracy& acc = estimate.per_slot[slot_index(id)];
    out << slot_name(id) << ": accuracy " << fixed(acc.accuracy()) << " (" << acc.correct << "/" << acc.scored
        << "), weight " << fixed(estimate.weights[slot_index(id)]) << "\n";
  }
  return kExitOk;
}

struct Prediction {
  const ImageRecord* record;
  Classification result;
};

std::vector<Prediction> predict_all(const EnsembleModel& model, const std::vector<ImageRecord>& records) {
  std::vector<Prediction> out;
  out.reserve(records.size());
  for (const ImageRecord& record : records) out.push_back({&record, classify_image(record, model)});
  return out;
}

std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

int run_predict(const Options& opt, std::ostream& out) {
  const Bundle bundle = open_bundle(opt);
  const Manifest manifest = load_manifest(opt.manifest, opt.strict);
  const std::vector<ImageRecord> records = load_records(manifest);
  const std::vector<Prediction> predictions = predict_all(bundle.model, records);

  std::ofstream file;
  if (!opt.out.empty()) {
    file.open(opt.out, std::ios::trunc);
    if (!file) throw InvalidInputError("cannot open " + opt.out + " for writing");
  }
  std::ostream& sink = opt.out.empty() ? out : file;
  sink << "image_id,label,p_positive,p_neutral,p_negative,n_faces,slots\n";
  for (const Prediction& p : predictions) {
    std::string slots;
    for (SlotId id : p.result.slots_used) {
      if (!slots.empty()) slots += ';';
      slots += slot_name(id);
    }
    sink << p.record->image_id << ',' << label_name(p.result.label) << ',' << number(p.result.fused[0]) << ','
         << number(p.result.fused[1]) << ',' << number(p.result.fused[2]) << ',' << p.record->n_faces() << ','
         << slots << '\n';
  }
  return kExitOk;
}

int run_eval(const Options& opt, std::ostream& out) {
  const Bundle bundle = open_bundle(opt);
  const Manifest manifest = load_manifest(opt.manifest, opt.strict);
  std::vector<ImageRecord> records = load_records(manifest);
  std::erase_if(records, [](const ImageRecord& r) { return !r.gold_label; });
  if (records.empty()) throw InvalidInputError("eval needs labeled records");

  const std::vector<Prediction> predictions = predict_all(bundle.model, records);
  std::vector<Label> predicted;
  std::vector<Label> gold;
  std::size_t noface = 0;
  for (const Prediction& p : predictions) {
    predicted.push_back(p.result.label);
    gold.push_back(*p.record->gold_label);
    noface += p.record->n_faces() == 0 ? 1 : 0;
  }
  EvalReport report = evaluate(predicted, gold);
  report.n_noface_images = noface;

  ReportContext context;
  context.split = manifest.split;
  context.model = &bundle.model;
  context.slot_accuracy = estimate_weights(bundle.model, records, bundle.weight_policy).per_slot;

  const fs::path report_path =
      opt.report.empty() ? fs::path(opt.bundle) / ("report_" + std::string(split_name(manifest.split)) + ".json")
                         : fs::path(opt.report);
  if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
  const std::string table = report_table(report, context);
  {
    std::ofstream json_out(report_path, std::ios::trunc);
    json_out << report_json(report, context);
    fs::path text_path = report_path;
    text_path.replace_extension(".txt");
    std::ofstream text_out(text_path, std::ios::trunc);
    text_out << table;
    if (!json_out || !text_out) throw InvalidInputError("failed writing report next to " + report_path.string());
  }
  out << table << "report written to " << report_path.string() << "\n";
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kModel:
    case ErrorKind::kNoUsablePredictor:
      return kExitModel;
    default:
      return kExitData;
  }
}

std::string_view category(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kInvalidInput:
      return "invalid input";
    case ErrorKind::kDegenerateGeometry:
      return "degenerate geometry";
    case ErrorKind::kEmptyInput:
      return "empty input";
    case ErrorKind::kParse:
      return "parse error";
    case ErrorKind::kNoUsablePredictor:
      return "no usable predictor";
    case ErrorKind::kUnclassifiableRecord:
      return "unclassifiable record";
    case ErrorKind::kModel:
      return "model error";
  }
  return "error";
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group-level emotion recognition: forests over face descriptors with weighted fusion", "gaffect"};
  app.require_subcommand(1, 1);
  Options opt;

  const std::vector<std::string> modes = {"always", "fallback_only"};
  const std::vector<std::string> aggregations = {"median", "mean"};
  auto common = [&](CLI::App* sub, bool needs_manifest, bool needs_bundle) {
    auto* m = sub->add_option("--manifest", opt.manifest, "Manifest document (JSON)");
    if (needs_manifest) m->required();
    auto* b = sub->add_option("--bundle", opt.bundle, "Model bundle directory");
    if (needs_bundle) b->required();
    sub->add_option("--config", opt.config, "Pipeline config (JSON)");
    sub->add_option("--seed", opt.seed, "Seed overriding the config");
    sub->add_flag("--strict", opt.strict, "Fail when a referenced file is missing");
    sub->add_option("--fullimage-mode", opt.fullimage_mode, "always | fallback_only")
        ->check(CLI::IsMember(modes));
    sub->add_option("--aggregate", opt.aggregate, "median | mean")->check(CLI::IsMember(aggregations));
    sub->add_option("--threads", opt.threads, "Training threads (0: all cores)");
  };

  auto* synth = app.add_subcommand("synth", "Generate the synthetic fixture dataset");
  common(synth, false, false);
  synth->add_option("--out", opt.out, "Output directory")->required();
  synth->add_option("--profile", opt.profile, "standard | heavy_tailed");

  auto* train = app.add_subcommand("train", "Train the five forests and write a bundle");
  common(train, true, true);

  auto* weights = app.add_subcommand("weights", "Estimate fusion weights on a validation manifest");
  common(weights, true, true);

  auto* predict = app.add_subcommand("predict", "Write fused scores and labels per image");
  common(predict, true, true);
  predict->add_option("--out", opt.out, "CSV output path (default: stdout)");

  auto* eval = app.add_subcommand("eval", "Predict, then report accuracy and the confusion matrix");
  common(eval, true, true);
  eval->add_option("--report", opt.report, "Report path (default: BUNDLE/report_<split>.json)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "gaffect: usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return run_synth(opt, out);
    if (train->parsed()) return run_train(opt, out);
    if (weights->parsed()) return run_weights(opt, out);
    if (predict->parsed()) return run_predict(opt, out);
    if (eval->parsed()) return run_eval(opt, out);
  } catch (const UsageError& e) {
    err << "gaffect: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "gaffect: " << category(e) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "gaffect: io error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace gaffect
