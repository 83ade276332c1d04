#include "gaffect/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gaffect/error.hpp"
#include "gaffect/io.hpp"
#include "gaffect/random.hpp"

namespace gaffect {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kProjectionStream = 1000;
constexpr std::uint64_t kDeformationStream = 1100;

using Vec = std::vector<double>;

// Row-major rows x cols Gaussian matrix scaled by 1 / sqrt(cols).
Vec gaussian_matrix(std::uint64_t seed, std::uint64_t stream, std::size_t rows, std::size_t cols) {
  CounterRng rng(seed, stream);
  Vec m(rows * cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  for (auto& v : m) v = scale * rng.normal();
  return m;
}

Vec add_noise(const Vec& base, double sigma, CounterRng& rng) {
  Vec out(base);
  for (auto& v : out) v += sigma * rng.normal();
  return out;
}

struct Generator {
  const SynthConfig& config;
  std::array<Vec, kNumModalities> projections;  // embedding modalities only
  Vec deformation;                              // (2 * 68) x latent_dim
  std::array<Point2, kNumLandmarks> face_template = landmark_template();

  explicit Generator(const SynthConfig& c) : config(c) {
    for (Modality m : kAllModalities) {
      if (m == Modality::kLandmarks) continue;
      projections[modality_index(m)] =
          gaussian_matrix(c.seed, kProjectionStream + modality_index(m), modality_dim(m), c.latent_dim);
    }
    deformation = gaussian_matrix(c.seed, kDeformationStream, 2 * kNumLandmarks, c.latent_dim);
  }

  Vec class_mean(std::size_t label) const {
    Vec mu(config.latent_dim, 0.0);
    mu[label % config.latent_dim] = config.class_separation;
    return mu;
  }

  std::vector<double> embedding(Modality m, const Vec& view, CounterRng& rng) const {
    const Vec& w = projections[modality_index(m)];
    const std::size_t dim = modality_dim(m);
    std::vector<double> x(dim);
    for (std::size_t r = 0; r < dim; ++r) {
      double acc = 0.0;
      for (std::size_t k = 0; k < config.latent_dim; ++k) acc += w[r * config.latent_dim + k] * view[k];
      x[r] = acc + config.embedding_noise * rng.normal();
    }
    return x;
  }

  std::vector<double> landmarks(const Vec& view, CounterRng& rng) const {
    std::array<Point2, kNumLandmarks> pts{};
    for (std::size_t p = 0; p < kNumLandmarks; ++p) {
      double dx = 0.0;
      double dy = 0.0;
      for (std::size_t k = 0; k < config.latent_dim; ++k) {
        dx += deformation[(2 * p) * config.latent_dim + k] * view[k];
        dy += deformation[(2 * p + 1) * config.latent_dim + k] * view[k];
      }
      pts[p].x = face_template[p].x + config.landmark_displacement * dx + config.landmark_jitter * rng.normal();
      pts[p].y = face_template[p].y + config.landmark_displacement * dy + config.landmark_jitter * rng.normal();
    }
    // Random similarity transform into image pixel coordinates.
    const double scale = 40.0 + 160.0 * rng.uniform();
    const double angle = (rng.uniform() - 0.5) * 0.7;
    const double tx = 1000.0 * rng.uniform();
    const double ty = 800.0 * rng.uniform();
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (auto& p : pts) {
      const Point2 q{scale * (c * p.x - s * p.y) + tx, scale * (s * p.x + c * p.y) + ty};
      p = q;
    }
    return landmark_features(LandmarkSet(pts)).values;
  }

  ClassScores fullimage_score(const Vec& z, CounterRng& rng) const {
    const Vec noisy = add_noise(z, config.fullimage_noise, rng);
    ClassScores logits{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const Vec mu = class_mean(c);
      double d2 = 0.0;
      for (std::size_t k = 0; k < config.latent_dim; ++k) d2 += (noisy[k] - mu[k]) * (noisy[k] - mu[k]);
      logits[c] = -d2 / 2.0;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double mass = 0.0;
    for (auto& v : logits) mass += (v = std::exp(v - top));
    for (auto& v : logits) v /= mass;
    return logits;
  }
};

std::string image_id(DataSplit split, std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return std::string(split_name(split)) + "_" + digits;
}

std::size_t write_split(const Generator& gen, DataSplit split, std::size_t count, const fs::path& out_dir,
                        const fs::path& manifest_path) {
  const SynthConfig& config = gen.config;
  const std::uint64_t split_tag = static_cast<std::uint64_t>(split) + 1;
  Manifest manifest;
  manifest.split = split;
  std::size_t noface = 0;

  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng(config.seed, (split_tag << 32) | i);
    const std::size_t label = static_cast<std::size_t>(rng.bounded(kNumClasses));
    const bool no_faces = rng.uniform() < config.noface_fraction;
    const std::size_t n_faces =
        no_faces ? 0 : config.min_faces + static_cast<std::size_t>(rng.bounded(config.max_faces - config.min_faces + 1));
    noface += no_faces ? 1 : 0;

    const Vec z = add_noise(gen.class_mean(label), config.image_noise, rng);
    const std::string id = image_id(split, i);
    std::array<FeatureMatrix, kNumModalities> matrices;
    for (Modality m : kAllModalities) matrices[modality_index(m)] = FeatureMatrix(id, m);

    for (std::size_t f = 0; f < n_faces; ++f) {
      Vec u = add_noise(z, config.face_noise, rng);
      if (config.outlier_probability > 0.0 && rng.uniform() < config.outlier_probability) {
        u = add_noise(u, config.outlier_scale, rng);
      }
      for (Modality m : kAllModalities) {
        const Vec view = add_noise(u, config.modality_noise[modality_index(m)], rng);
        const auto row = m == Modality::kLandmarks ? gen.landmarks(view, rng) : gen.embedding(m, view, rng);
        matrices[modality_index(m)].append_row(row);
      }
    }

    ManifestEntry entry;
    entry.image_id = id;
    entry.gold_label = label_from_index(label);
    const fs::path feature_dir = out_dir / "features" / split_name(split);
    for (Modality m : kAllModalities) {
      const fs::path p = feature_dir / (id + "." + std::string(modality_name(m)) + ".txt");
      write_feature_file(p, matrices[modality_index(m)], config.significant_digits);
      entry.features[modality_index(m)] = p;
    }
    const fs::path score_path = out_dir / "scores" / split_name(split) / (id + ".txt");
    write_score_file(score_path, gen.fullimage_score(z, rng));
    entry.fullimage_score = score_path;
    manifest.entries.push_back(std::move(entry));
  }
  write_manifest(manifest_path, manifest);
  return noface;
}

}  // namespace

std::optional<SynthConfig> synth_profile(std::string_view name) {
  SynthConfig config;
  if (name == "standard") return config;
  if (name == "heavy_tailed") {
    config.n_train = 300;
    config.n_validation = 300;
    config.min_faces = 3;
    config.max_faces = 5;
    config.noface_fraction = 0.0;
    config.outlier_probability = 0.3;
    config.outlier_scale = 8.0;
    return config;
  }
  return std::nullopt;
}

std::array<Point2, kNumLandmarks> landmark_template() {
  std::array<Point2, kNumLandmarks> pts{};
  const double pi = std::numbers::pi;
  auto ellipse = [&](std::size_t first, std::size_t count, double cx, double cy, double rx, double ry) {
    for (std::size_t k = 0; k < count; ++k) {
      const double t = 2.0 * pi * static_cast<double>(k) / static_cast<double>(count);
      pts[first + k] = {cx + rx * std::cos(t), cy + ry * std::sin(t)};
    }
  };
  for (std::size_t k = 0; k < 17; ++k) {  // jaw line
    const double t = pi * static_cast<double>(k) / 16.0;
    pts[k] = {-0.45 * std::cos(t), 0.1 + 0.5 * std::sin(t)};
  }
  for (std::size_t k = 0; k < 5; ++k) {  // brows
    const double t = static_cast<double>(k) / 4.0;
    const double arch = 0.05 * std::sin(pi * t);
    pts[17 + k] = {-0.40 + 0.30 * t, -0.25 - arch};
    pts[22 + k] = {0.10 + 0.30 * t, -0.25 - arch};
  }
  for (std::size_t k = 0; k < 4; ++k) pts[27 + k] = {0.0, -0.15 + 0.08 * static_cast<double>(k)};  // nose bridge
  for (std::size_t k = 0; k < 5; ++k) pts[31 + k] = {-0.10 + 0.05 * static_cast<double>(k), 0.15};  // nostrils
  ellipse(36, 6, -0.22, -0.10, 0.08, 0.035);
  ellipse(42, 6, 0.22, -0.10, 0.08, 0.035);
  ellipse(48, 12, 0.0, 0.35, 0.20, 0.08);
  ellipse(60, 8, 0.0, 0.35, 0.12, 0.04);
  return pts;
}

SynthSummary generate_synthetic(const SynthConfig& config, const fs::path& out_dir) {
  if (config.latent_dim < kNumClasses) throw InvalidInputError("synth: latent_dim must be at least 3");
  if (config.max_faces < config.min_faces) throw InvalidInputError("synth: max_faces < min_faces");
  if (config.n_train == 0 || config.n_validation == 0) throw InvalidInputError("synth: empty split");
  fs::create_directories(out_dir);

  const Generator gen(config);
  SynthSummary summary;
  summary.train_manifest = out_dir / "train.json";
  summary.validation_manifest = out_dir / "validation.json";
  summary.train_images = config.n_train;
  summary.validation_images = config.n_validation;
  summary.noface_images += write_split(gen, DataSplit::kTrain, config.n_train, out_dir, summary.train_manifest);
  summary.noface_images +=
      write_split(gen, DataSplit::kValidation, config.n_validation, out_dir, summary.validation_manifest);
  return summary;
}

}  // namespace gaffect
