#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gaffect/error.hpp"
#include "gaffect/io.hpp"

namespace gaffect {

namespace {

constexpr std::string_view kFeatureMagic = "gaffect-features";
constexpr std::string_view kScoreMagic = "gaffect-score";
constexpr std::string_view kFormatVersion = "v1";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Calls `fn(line_number, tokens)` for every significant line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    ++line_no;
    const auto tokens = tokenize(line);
    if (!tokens.empty() && tokens.front().front() != '#') fn(line_no, tokens);
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
}

std::optional<std::string_view> key_value(std::string_view token, std::string_view key) {
  if (token.size() > key.size() && token.substr(0, key.size()) == key && token[key.size()] == '=') {
    return token.substr(key.size() + 1);
  }
  return std::nullopt;
}

std::optional<std::size_t> parse_count(std::string_view s) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

double parse_value(std::string_view token, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || end != token.data() + token.size() || !std::isfinite(v)) {
    throw ParseError(ParseError::Reason::kNonNumeric, source, line,
                     "not a finite number: '" + std::string(token) + "'");
  }
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInputError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InvalidInputError("failed writing " + path.string());
}

void append_number(std::string& out, double v, std::optional<int> digits) {
  char buf[64];
  const auto result = digits ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, *digits)
                             : std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, result.ptr);
}

}  // namespace

FeatureMatrix parse_feature_text(std::string_view text, const std::string& source,
                                 const std::string& image_id) {
  std::optional<FeatureMatrix> matrix;
  std::vector<double> row;
  for_each_line(text, [&](std::size_t line, const std::vector<std::string_view>& tokens) {
    if (tokens.front() == kFeatureMagic) {
      if (matrix) throw ParseError(ParseError::Reason::kDuplicateHeader, source, line, "duplicate header");
      std::optional<Modality> modality;
      std::optional<std::size_t> dim;
      if (tokens.size() != 4 || tokens[1] != kFormatVersion) {
        throw ParseError(ParseError::Reason::kSyntax, source, line,
                         "expected 'gaffect-features v1 modality=<name> dim=<n>'");
      }
      for (std::size_t i = 2; i < tokens.size(); ++i) {
        if (auto v = key_value(tokens[i], "modality")) {
          modality = parse_modality(*v);
          if (!modality) {
            throw ParseError(ParseError::Reason::kSyntax, source, line, "unknown modality '" + std::string(*v) + "'");
          }
        } else if (auto d = key_value(tokens[i], "dim")) {
          dim = parse_count(*d);
          if (!dim) throw ParseError(ParseError::Reason::kSyntax, source, line, "bad dim");
        } else {
          throw ParseError(ParseError::Reason::kSyntax, source, line,
                           "unexpected header field '" + std::string(tokens[i]) + "'");
        }
      }
      if (!modality || !dim) throw ParseError(ParseError::Reason::kSyntax, source, line, "incomplete header");
      if (*dim != modality_dim(*modality)) {
        throw ParseError(ParseError::Reason::kDimensionMismatch, source, line,
                         "declared dim " + std::to_string(*dim) + " but " + std::string(modality_name(*modality)) +
                             " vectors have " + std::to_string(modality_dim(*modality)) + " values");
      }
      matrix.emplace(image_id, *modality);
      return;
    }
    if (!matrix) throw ParseError(ParseError::Reason::kMissingHeader, source, line, "data before header");
    if (tokens.size() != matrix->dim()) {
      throw ParseError(ParseError::Reason::kDimensionMismatch, source, line,
                       "row has " + std::to_string(tokens.size()) + " values, expected " +
                           std::to_string(matrix->dim()));
    }
    row.resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) row[i] = parse_value(tokens[i], source, line);
    matrix->append_row(row);
  });
  if (!matrix) throw ParseError(ParseError::Reason::kMissingHeader, source, 0, "missing header");
  return std::move(*matrix);
}

FeatureMatrix load_feature_file(const std::filesystem::path& path, const std::string& image_id) {
  return parse_feature_text(read_file(path), path.string(), image_id);
}

std::string format_feature_text(const FeatureMatrix& matrix, std::optional<int> significant_digits) {
  std::string out;
  out.reserve(64 + matrix.data().size() * 12);
  out.append(kFeatureMagic).append(" ").append(kFormatVersion);
  out.append(" modality=").append(modality_name(matrix.modality()));
  out.append(" dim=").append(std::to_string(matrix.dim())).append("\n");
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto row = matrix.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(' ');
      append_number(out, row[i], significant_digits);
    }
    out.push_back('\n');
  }
  return out;
}

void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& matrix,
                        std::optional<int> significant_digits) {
  write_file(path, format_feature_text(matrix, significant_digits));
}

ClassScores parse_score_text(std::string_view text, const std::string& source) {
  bool header = false;
  std::optional<ClassScores> scores;
  for_each_line(text, [&](std::size_t line, const std::vector<std::string_view>& tokens) {
    if (tokens.front() == kScoreMagic) {
      if (header) throw ParseError(ParseError::Reason::kDuplicateHeader, source, line, "duplicate header");
      if (tokens.size() != 3 || tokens[1] != kFormatVersion || tokens[2] != "classes=3") {
        throw ParseError(ParseError::Reason::kSyntax, source, line, "expected 'gaffect-score v1 classes=3'");
      }
      header = true;
      return;
    }
    if (!header) throw ParseError(ParseError::Reason::kMissingHeader, source, line, "data before header");
    if (scores) throw ParseError(ParseError::Reason::kSyntax, source, line, "more than one score row");
    if (tokens.size() != kNumClasses) {
      throw ParseError(ParseError::Reason::kDimensionMismatch, source, line, "expected 3 class scores");
    }
    ClassScores s{};
    for (std::size_t c = 0; c < kNumClasses; ++c) s[c] = parse_value(tokens[c], source, line);
    scores = s;
  });
  if (!header) throw ParseError(ParseError::Reason::kMissingHeader, source, 0, "missing header");
  if (!scores) throw ParseError(ParseError::Reason::kSyntax, source, 0, "no score row");
  return *scores;
}

ClassScores load_score_file(const std::filesystem::path& path) {
  return parse_score_text(read_file(path), path.string());
}

void write_score_file(const std::filesystem::path& path, const ClassScores& scores) {
  std::string out(kScoreMagic);
  out.append(" ").append(kFormatVersion).append(" classes=3\n");
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (c) out.push_back(' ');
    append_number(out, scores[c], std::nullopt);
  }
  out.push_back('\n');
  write_file(path, out);
}

std::string fixed(double value, int decimals) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
  return {buf, result.ptr};
}

}  // namespace gaffect
