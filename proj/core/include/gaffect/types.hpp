#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gaffect {

inline constexpr std::size_t kNumClasses = 3;

// Numeric codes are part of the on-disk formats.
enum class Label : std::uint8_t { kPositive = 0, kNeutral = 1, kNegative = 2 };

using ClassScores = std::array<double, kNumClasses>;
using ClassCounts = std::array<std::uint32_t, kNumClasses>;

std::string_view label_name(Label label);
std::optional<Label> parse_label(std::string_view name);
inline std::size_t label_index(Label label) { return static_cast<std::size_t>(label); }
Label label_from_index(std::size_t index);

/// Index of the largest score; ties go to the lowest class index.
std::size_t argmax(const ClassScores& scores);

/// Per-face descriptor families.
enum class Modality : std::uint8_t {
  kAvgpoolRgb = 0,
  kAvgpoolBgr = 1,
  kFc7Rgb = 2,
  kFc7Bgr = 3,
  kLandmarks = 4,
};

inline constexpr std::size_t kNumModalities = 5;
inline constexpr std::array<Modality, kNumModalities> kAllModalities = {
    Modality::kAvgpoolRgb, Modality::kAvgpoolBgr, Modality::kFc7Rgb, Modality::kFc7Bgr,
    Modality::kLandmarks};

inline constexpr std::size_t kAvgpoolDim = 512;
inline constexpr std::size_t kFc7Dim = 4096;
inline constexpr std::size_t kNumLandmarks = 68;
inline constexpr std::size_t kLandmarkDim = kNumLandmarks * (kNumLandmarks - 1) / 2;  // 2278

std::size_t modality_dim(Modality modality);
std::string_view modality_name(Modality modality);
std::optional<Modality> parse_modality(std::string_view name);
inline std::size_t modality_index(Modality modality) { return static_cast<std::size_t>(modality); }

}  // namespace gaffect
