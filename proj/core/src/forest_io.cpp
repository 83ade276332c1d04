#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "gaffect/error.hpp"
#include "gaffect/forest.hpp"

namespace gaffect {

namespace {

constexpr std::string_view kMagic{"GAFFOREST", 9};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Writer {
 public:
  void raw(std::string_view s) { buf_.append(s); }
  template <typename T>
  void le(T v) {
    const auto u = static_cast<std::make_unsigned_t<T>>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void u8(bool v) { le(static_cast<std::uint8_t>(v ? 1 : 0)); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view buf) : buf_(buf) {}

  std::string_view raw(std::size_t n) {
    need(n);
    auto s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  bool flag() {
    const auto v = le<std::uint8_t>();
    if (v > 1) throw ModelError("forest file: bad boolean byte");
    return v == 1;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw ModelError("forest file is truncated");
  }
  std::string_view buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_forest(std::ostream& out, const RandomForestModel& model) {
  Writer w;
  w.raw(kMagic);
  w.le(kForestFormatVersion);
  w.le(static_cast<std::uint8_t>(model.modality));
  w.le(static_cast<std::uint64_t>(model.feature_dim));
  w.le(static_cast<std::uint64_t>(model.params.n_trees));
  w.u8(model.params.max_depth.has_value());
  w.le(static_cast<std::uint64_t>(model.params.max_depth.value_or(0)));
  w.le(static_cast<std::uint64_t>(model.params.min_samples_leaf));
  w.le(static_cast<std::uint64_t>(model.params.mtry.value_or(0)));
  w.u8(model.params.bootstrap);
  w.le(model.params.seed);
  w.le(model.training_fingerprint);
  for (const auto& tree : model.trees) {
    w.le(static_cast<std::uint64_t>(tree.nodes().size()));
    for (const auto& node : tree.nodes()) {
      w.le(node.feature);
      w.f64(node.threshold);
      w.le(node.left);
      w.le(node.right);
      for (auto c : node.counts) w.le(c);
    }
  }
  const std::uint64_t checksum = fnv1a(w.str());
  w.le(checksum);
  out.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
  if (!out) throw ModelError("failed to write forest");
}

RandomForestModel read_forest(std::istream& in) {
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kMagic.size() + 8) throw ModelError("forest file is truncated");
  const std::string_view body(buf.data(), buf.size() - 8);
  Reader tail(std::string_view(buf).substr(body.size()));
  if (tail.le<std::uint64_t>() != fnv1a(body)) throw ModelError("forest file checksum mismatch");

  Reader r(body);
  if (r.raw(kMagic.size()) != kMagic) throw ModelError("not a forest file (bad magic)");
  const auto version = r.le<std::uint32_t>();
  if (version != kForestFormatVersion) {
    throw ModelError("unsupported forest format version " + std::to_string(version));
  }
  RandomForestModel model;
  const auto modality = r.le<std::uint8_t>();
  if (modality >= kNumModalities) throw ModelError("forest file: unknown modality");
  model.modality = static_cast<Modality>(modality);
  model.feature_dim = r.le<std::uint64_t>();
  model.params.n_trees = r.le<std::uint64_t>();
  const bool has_depth = r.flag();
  const auto depth = r.le<std::uint64_t>();
  if (has_depth) model.params.max_depth = depth;
  model.params.min_samples_leaf = r.le<std::uint64_t>();
  model.params.mtry = r.le<std::uint64_t>();
  model.params.bootstrap = r.flag();
  model.params.seed = r.le<std::uint64_t>();
  model.training_fingerprint = r.le<std::uint64_t>();
  if (model.feature_dim == 0 || model.params.n_trees == 0) throw ModelError("forest file: empty model");

  // Each node takes 32 bytes; bound the allocation by what the file can hold.
  constexpr std::size_t kNodeBytes = 4 + 8 + 4 + 4 + 3 * 4;
  if (model.params.n_trees > r.remaining() / 8) throw ModelError("forest file is truncated");
  model.trees.reserve(model.params.n_trees);
  for (std::size_t t = 0; t < model.params.n_trees; ++t) {
    const auto count = r.le<std::uint64_t>();
    if (count == 0 || count > r.remaining() / kNodeBytes) throw ModelError("forest file: bad node count");
    std::vector<TreeNode> nodes(count);
    for (std::size_t i = 0; i < count; ++i) {
      TreeNode& node = nodes[i];
      node.feature = r.le<std::int32_t>();
      node.threshold = r.f64();
      node.left = r.le<std::uint32_t>();
      node.right = r.le<std::uint32_t>();
      for (auto& c : node.counts) c = r.le<std::uint32_t>();
      if (!node.is_leaf()) {
        if (static_cast<std::size_t>(node.feature) >= model.feature_dim || node.left <= i ||
            node.right <= i || node.left >= count || node.right >= count) {
          throw ModelError("forest file: malformed tree structure");
        }
      } else if (node.counts[0] + node.counts[1] + node.counts[2] == 0) {
        throw ModelError("forest file: empty leaf");
      }
    }
    model.trees.emplace_back(std::move(nodes));
  }
  if (r.remaining() != 0) throw ModelError("forest file has trailing bytes");
  return model;
}

void save_forest(const std::filesystem::path& path, const RandomForestModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot open " + path.string() + " for writing");
  write_forest(out, model);
}

RandomForestModel load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open forest file " + path.string());
  return read_forest(in);
}

}  // namespace gaffect
