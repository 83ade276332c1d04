#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include "gaffect/features.hpp"
#include "gaffect/types.hpp"

namespace gaffect {

/// Generative model of the synthetic group-photo dataset.
///
/// Each image draws a class y and an image latent z = mu_y + image_noise * N(0, I)
/// in a `latent_dim`-dimensional space, where mu_c = class_separation * e_c.
/// Each face draws u = z + face_noise * N(0, I), plus outlier_scale * N(0, I)
/// with probability outlier_probability. Each modality m sees its own view
/// v_m = u + modality_noise[m] * N(0, I):
///   embeddings  x = W_m v_m + embedding_noise * N(0, I), W_m fixed Gaussian
///   landmarks   a 68-point template deformed linearly by v_m, jittered, put
///               through a random similarity transform, then max-normalized
///               pairwise distances
/// The full-image score is softmax(-|z + fullimage_noise * N(0, I) - mu_c|^2 / 2).
/// Modality noise is independent across views, so no single view is
/// Bayes-optimal and fusing views recovers information.
struct SynthConfig {
  std::size_t n_train = 600;
  std::size_t n_validation = 300;
  std::size_t min_faces = 1;
  std::size_t max_faces = 4;
  double noface_fraction = 0.05;
  std::size_t latent_dim = 8;
  double class_separation = 2.0;
  double image_noise = 0.6;
  double face_noise = 0.5;
  std::array<double, kNumModalities> modality_noise = {1.1, 1.0, 1.3, 1.2, 1.5};
  double embedding_noise = 0.3;
  double landmark_displacement = 0.02;
  double landmark_jitter = 0.004;
  double fullimage_noise = 1.0;
  double outlier_probability = 0.0;
  double outlier_scale = 0.0;
  int significant_digits = 4;
  std::uint64_t seed = 0;
};

/// "standard" or "heavy_tailed" (more faces per image, frequent outlier faces).
std::optional<SynthConfig> synth_profile(std::string_view name);

struct SynthSummary {
  std::filesystem::path train_manifest;
  std::filesystem::path validation_manifest;
  std::size_t train_images = 0;
  std::size_t validation_images = 0;
  std::size_t noface_images = 0;
};

/// Writes train.json, validation.json and their feature/score files under `out_dir`.
SynthSummary generate_synthetic(const SynthConfig& config, const std::filesystem::path& out_dir);

/// The fixed 68-point face template in unit face coordinates.
std::array<Point2, kNumLandmarks> landmark_template();

}  // namespace gaffect
