// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout (all integers 32-bit little-endian unsigned):
//
//   "AMII" | version byte | config length | config text (key=value lines, UTF-8)
//   | record count | records...
//
// Each record: name length | name | rank | dims... | float64 LE values.
// Model parameters come first in layout order, then the four feature
// statistics vectors named stats.*.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "amii/diff/param.hpp"
#include "amii/error.hpp"
#include "amii/feat/csv.hpp"
#include "amii/feat/stats.hpp"
#include "amii/model/amii.hpp"
#include "amii/model/config.hpp"

namespace amii::train {

inline constexpr char kCheckpointMagic[4] = {'A', 'M', 'I', 'I'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
  model::AmiiConfig config;
  diff::ParamSet params;
  feat::FeatureStats stats;
  std::map<std::string, std::string> extra;  // informational key=value pairs kept alongside the config
};

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw FormatError("checkpoint: truncated file");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  double f64() {
    auto s = take(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return std::bit_cast<double>(bits);
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

inline void put_record(std::string& out, const std::string& name, const diff::Shape& shape, std::span<const double> data) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : data) put_f64(out, v);
}

inline std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace detail

inline std::string config_text(const model::AmiiConfig& cfg, const std::map<std::string, std::string>& extra = {}) {
  std::ostringstream os;
  os << "window=" << cfg.window << '\n'
     << "heads=" << cfg.heads << '\n'
     << "cell=" << cfg.cell << '\n'
     << "decoder_hidden=" << cfg.decoder_hidden << '\n'
     << "speech_dim=" << cfg.speech_dim << '\n'
     << "face_dim=" << cfg.face_dim << '\n'
     << "use_memory_lstm=" << detail::bool_str(cfg.use_memory_lstm) << '\n'
     << "use_dual_cross_attention=" << detail::bool_str(cfg.use_dual_cross_attention) << '\n'
     << "use_inter_encoder=" << detail::bool_str(cfg.use_inter_encoder) << '\n'
     << "pooling=" << (cfg.pooling == model::Pooling::kMean ? "mean" : "last") << '\n'
     << "ablation=" << model::ablation_name(model::ablation_of(cfg)) << '\n';
  for (const auto& [k, v] : extra) os << "x." << k << '=' << v << '\n';
  return os.str();
}

inline model::AmiiConfig parse_config_text(std::string_view text, std::map<std::string, std::string>* extra = nullptr) {
  model::AmiiConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  auto as_size = [](const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const unsigned long long n = std::stoull(v, &pos);
      if (pos != v.size()) throw FormatError("");
      return static_cast<std::size_t>(n);
    } catch (...) {
      throw FormatError("checkpoint config: bad integer for " + key + ": '" + v + "'");
    }
  };
  auto as_bool = [](const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw FormatError("checkpoint config: bad boolean for " + key + ": '" + v + "'");
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint config: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "window") cfg.window = as_size(key, value);
    else if (key == "heads") cfg.heads = as_size(key, value);
    else if (key == "cell") cfg.cell = as_size(key, value);
    else if (key == "decoder_hidden") cfg.decoder_hidden = as_size(key, value);
    else if (key == "speech_dim") cfg.speech_dim = as_size(key, value);
    else if (key == "face_dim") cfg.face_dim = as_size(key, value);
    else if (key == "use_memory_lstm") cfg.use_memory_lstm = as_bool(key, value);
    else if (key == "use_dual_cross_attention") cfg.use_dual_cross_attention = as_bool(key, value);
    else if (key == "use_inter_encoder") cfg.use_inter_encoder = as_bool(key, value);
    else if (key == "pooling") cfg.pooling = value == "mean" ? model::Pooling::kMean : model::Pooling::kLast;
    else if (key.starts_with("x.") && extra) (*extra)[key.substr(2)] = value;
  }
  return cfg;
}

inline std::string checkpoint_bytes(const Checkpoint& ck) {
  model::check_params(ck.params, ck.config);
  std::string out(kCheckpointMagic, 4);
  out.push_back(static_cast<char>(kCheckpointVersion));
  const std::string cfg = config_text(ck.config, ck.extra);
  detail::put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  detail::put_u32(out, static_cast<std::uint32_t>(ck.params.size() + 4));
  for (const auto& p : ck.params) detail::put_record(out, p.name, p.value.shape(), p.value.data());
  detail::put_record(out, "stats.speech_mean", {feat::kSpeechDim}, ck.stats.speech_mean);
  detail::put_record(out, "stats.speech_std", {feat::kSpeechDim}, ck.stats.speech_std);
  detail::put_record(out, "stats.face_mean", {feat::kFaceDim}, ck.stats.face_mean);
  detail::put_record(out, "stats.face_std", {feat::kFaceDim}, ck.stats.face_std);
  return out;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string bytes = checkpoint_bytes(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

/// Parses a whole checkpoint image; nothing is returned unless every record is intact.
inline Checkpoint parse_checkpoint(std::string_view bytes) {
  detail::Reader r(bytes);
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic");
  r.take(4);
  const auto version = static_cast<std::uint8_t>(r.take(1)[0]);
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  ck.config = parse_config_text(r.take(r.u32()), &ck.extra);
  const std::uint32_t count = r.u32();
  std::map<std::string, std::vector<double>> stats;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.take(r.u32()));
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw FormatError("checkpoint: implausible rank for " + name);
    diff::Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t n = diff::shape_size(shape);
    if (n > bytes.size() / 8) throw FormatError("checkpoint: truncated file");
    std::vector<double> data(n);
    for (double& v : data) v = r.f64();
    if (name.starts_with("stats.")) {
      stats[name] = std::move(data);
    } else {
      try {
        ck.params.add(name, diff::Tensor(std::move(shape), std::move(data)));
      } catch (const ParameterError& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
      }
    }
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  auto fill = [&](const std::string& key, auto& dst) {
    auto it = stats.find(key);
    if (it == stats.end() || it->second.size() != dst.size()) throw FormatError("checkpoint: missing " + key);
    std::copy(it->second.begin(), it->second.end(), dst.begin());
  };
  fill("stats.speech_mean", ck.stats.speech_mean);
  fill("stats.speech_std", ck.stats.speech_std);
  fill("stats.face_mean", ck.stats.face_mean);
  fill("stats.face_std", ck.stats.face_std);
  model::check_params(ck.params, ck.config);
  return ck;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

/// Loads a checkpoint for a model built with `expected`; any configuration difference is a consistency error.
inline Checkpoint load_checkpoint(const std::filesystem::path& path, const model::AmiiConfig& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.config == expected)) {
    throw ConsistencyError("checkpoint configuration (" + std::string(model::ablation_name(model::ablation_of(ck.config))) +
                           ") does not match the requested model (" +
                           model::ablation_name(model::ablation_of(expected)) + ")");
  }
  model::check_params(ck.params, expected);
  return ck;
}

}  // namespace amii::train
