// SPDX-License-Identifier: Apache-2.0
//
// key=value configuration shared by every subcommand. Files hold one pair per
// line, '#' starts a comment; command-line flags override file values.
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "amii/error.hpp"
#include "amii/feat/csv.hpp"

namespace amii::cli {

namespace fs = std::filesystem;

inline constexpr const char* kArtifactVersion = "0.1.0";

using Settings = std::map<std::string, std::string>;

struct KeySpec {
  std::string key;
  std::string fallback;  // empty: required unless the command says otherwise
  std::string help;
};

struct CommandSpec {
  std::string name;
  std::string summary;
  std::vector<KeySpec> keys;

  bool has(std::string_view key) const {
    for (const auto& k : keys)
      if (k.key == key) return true;
    return false;
  }

  std::string key_list() const {
    std::string out;
    for (const auto& k : keys) out += (out.empty() ? "" : ", ") + k.key;
    return out;
  }
};

inline Settings parse_settings(std::string_view text, const std::string& origin = "config") {
  Settings out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = feat::detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(origin + ": line " + std::to_string(row) + " is not key=value");
    const std::string key(feat::detail::trim(t.substr(0, eq)));
    if (key.empty()) throw ConfigError(origin + ": line " + std::to_string(row) + " has an empty key");
    out[key] = std::string(feat::detail::trim(t.substr(eq + 1)));
  }
  return out;
}

inline Settings load_settings(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_settings(ss.str(), path.string());
}

/// Merges defaults, file values and flags (in that order of precedence, last
/// wins). Any key the command does not know is rejected.
inline Settings resolve(const CommandSpec& spec, const Settings& file, const Settings& flags) {
  Settings out;
  for (const auto& k : spec.keys) out[k.key] = k.fallback;
  for (const Settings* layer : {&file, &flags})
    for (const auto& [k, v] : *layer) {
      if (!spec.has(k))
        throw ConfigError(spec.name + ": unknown config key '" + k + "'; valid keys: " + spec.key_list());
      out[k] = v;
    }
  return out;
}

inline const std::string& get(const Settings& s, const std::string& key) {
  const auto it = s.find(key);
  if (it == s.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

inline const std::string& require(const Settings& s, const std::string& key) {
  const std::string& v = get(s, key);
  if (v.empty()) throw ConfigError("config key '" + key + "' is required");
  return v;
}

inline std::uint64_t get_u64(const Settings& s, const std::string& key) {
  const std::string& v = require(s, key);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

inline std::size_t get_size(const Settings& s, const std::string& key) {
  return static_cast<std::size_t>(get_u64(s, key));
}

inline double get_double(const Settings& s, const std::string& key) {
  const std::string& v = require(s, key);
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

/// A duration in seconds; a trailing 's' is allowed ("1s", "0.5s").
inline double get_seconds(const Settings& s, const std::string& key) {
  std::string v = require(s, key);
  if (v.ends_with('s')) v.pop_back();
  Settings tmp{{key, v}};
  return get_double(tmp, key);
}

inline bool get_bool(const Settings& s, const std::string& key) {
  const std::string& v = require(s, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

/// Resolved settings as a reusable config file; provenance goes in comments.
inline std::string manifest_text(const std::string& command, const Settings& resolved,
                                 const std::vector<std::pair<std::string, std::string>>& info = {}) {
  std::ostringstream os;
  os << "# amii run manifest\n"
     << "# command: " << command << '\n'
     << "# artifact_version: " << kArtifactVersion << '\n';
  for (const auto& [k, v] : info) os << "# " << k << ": " << v << '\n';
  for (const auto& [k, v] : resolved) os << k << '=' << v << '\n';
  return os.str();
}

inline void write_manifest(const fs::path& dir, const std::string& command, const Settings& resolved,
                           const std::vector<std::pair<std::string, std::string>>& info = {}) {
  fs::create_directories(dir);
  feat::detail::write_text(dir / "manifest.txt", manifest_text(command, resolved, info));
}

}  // namespace amii::cli
