// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "amii/error.hpp"
#include "amii/feat/frames.hpp"

namespace amii::feat {

namespace fs = std::filesystem;

/// Shortest text that round-trips: 17 significant digits, "NaN" for gaps.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

// Empty cells and NaN mark gaps.
inline double parse_cell(std::string_view cell, std::size_t row, std::string_view column) {
  if (cell.empty() || cell == "NaN" || cell == "nan" || cell == "NAN")
    return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = cell.data();
  if (!cell.empty() && cell.front() == '+') ++first;
  auto res = std::from_chars(first, cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
    throw ParseError("row " + std::to_string(row) + ", column " + std::string(column) + ": non-numeric cell '" +
                     std::string(cell) + "'");
  }
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // row-major, one entry per header column
};

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  for (auto cell : split_line(line)) table.header.emplace_back(cell);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(table.header.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_cell(cells[c], row, table.header[c]);
    table.rows.push_back(std::move(values));
  }
  return table;
}

inline std::size_t column_index(const CsvTable& t, std::string_view name, const fs::path& path) {
  auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw SchemaError(path.string() + ": missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - t.header.begin());
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

inline std::vector<std::string> person_columns() {
  std::vector<std::string> cols{"frame"};
  for (auto c : kSpeechColumns) cols.emplace_back(c);
  for (auto c : kFaceColumns) cols.emplace_back(c);
  return cols;
}

/// Reads one person's per-frame CSV. Gaps are kept as NaN; fps defaults to 25.
inline PersonTrack load_person_csv(const fs::path& path) {
  const auto table = detail::read_csv(path);
  const auto expected = person_columns();
  for (const auto& col : expected) detail::column_index(table, col, path);
  for (const auto& col : table.header) {
    if (std::find(expected.begin(), expected.end(), col) == expected.end())
      throw SchemaError(path.string() + ": unexpected column '" + col + "'");
  }
  std::array<std::size_t, kSpeechDim> s_idx{};
  std::array<std::size_t, kFaceDim> f_idx{};
  for (std::size_t i = 0; i < kSpeechDim; ++i) s_idx[i] = detail::column_index(table, kSpeechColumns[i], path);
  for (std::size_t i = 0; i < kFaceDim; ++i) f_idx[i] = detail::column_index(table, kFaceColumns[i], path);

  PersonTrack track;
  track.speech.resize(table.rows.size());
  track.face.resize(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t i = 0; i < kSpeechDim; ++i) track.speech[r].v[i] = table.rows[r][s_idx[i]];
    for (std::size_t i = 0; i < kFaceDim; ++i) track.face[r].v[i] = table.rows[r][f_idx[i]];
  }
  return track;
}

inline std::string person_csv_text(const PersonTrack& track, std::size_t first_frame = 0) {
  track.check();
  std::ostringstream os;
  const auto cols = person_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (std::size_t r = 0; r < track.size(); ++r) {
    os << first_frame + r;
    for (double v : track.speech[r].v) os << ',' << format_double(v);
    for (double v : track.face[r].v) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

inline void write_person_csv(const fs::path& path, const PersonTrack& track) {
  detail::write_text(path, person_csv_text(track));
}

/// Face-only series with explicit frame numbers (rollout output, or the face part of a person CSV).
struct FaceSeries {
  std::vector<long long> frames;
  std::vector<FaceFrame> face;
};

inline std::string face_csv_text(const FaceSeries& series) {
  std::ostringstream os;
  os << "frame";
  for (auto c : kFaceColumns) os << ',' << c;
  os << '\n';
  for (std::size_t r = 0; r < series.face.size(); ++r) {
    os << series.frames[r];
    for (double v : series.face[r].v) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

inline void write_face_csv(const fs::path& path, const FaceSeries& series) {
  detail::write_text(path, face_csv_text(series));
}

/// Reads the frame and face columns of any CSV that carries them; other columns are ignored.
inline FaceSeries load_face_csv(const fs::path& path) {
  const auto table = detail::read_csv(path);
  const std::size_t frame_idx = detail::column_index(table, "frame", path);
  std::array<std::size_t, kFaceDim> f_idx{};
  for (std::size_t i = 0; i < kFaceDim; ++i) f_idx[i] = detail::column_index(table, kFaceColumns[i], path);
  FaceSeries out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const double fr = table.rows[r][frame_idx];
    if (!std::isfinite(fr) || fr < 0 || fr != std::floor(fr))
      throw ParseError(path.string() + ": row " + std::to_string(r + 1) + " has an invalid frame number");
    out.frames.push_back(static_cast<long long>(fr));
    FaceFrame f;
    for (std::size_t i = 0; i < kFaceDim; ++i) f.v[i] = table.rows[r][f_idx[i]];
    out.face.push_back(f);
  }
  return out;
}

struct SessionMeta {
  std::string participant_p1;
  std::string participant_p2;
  double fps = kTargetFps;
};

inline SessionMeta read_meta(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  SessionMeta meta;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(path.string() + ": line " + std::to_string(row) + " is not key=value");
    const auto key = detail::trim(t.substr(0, eq));
    const auto value = detail::trim(t.substr(eq + 1));
    if (key == "participant_p1") {
      meta.participant_p1 = value;
    } else if (key == "participant_p2") {
      meta.participant_p2 = value;
    } else if (key == "fps") {
      meta.fps = detail::parse_cell(value, row, "fps");
      if (!(meta.fps > 0)) throw ParameterError(path.string() + ": fps must be positive");
    }
  }
  return meta;
}

inline void write_meta(const fs::path& path, const SessionMeta& meta) {
  detail::write_text(path, "participant_p1=" + meta.participant_p1 + "\nparticipant_p2=" + meta.participant_p2 +
                               "\nfps=" + format_double(meta.fps) + "\n");
}

/// Pairs two person tracks, truncating to the shorter one.
inline DyadRecording make_recording(std::string session_id, PersonTrack p1, PersonTrack p2) {
  const std::size_t n = std::min(p1.size(), p2.size());
  p1.speech.resize(n);
  p1.face.resize(n);
  p2.speech.resize(n);
  p2.face.resize(n);
  DyadRecording rec;
  rec.session_id = std::move(session_id);
  rec.p1 = std::move(p1);
  rec.p2 = std::move(p2);
  return rec;
}

/// Session id of "<session>.p1.csv".
inline std::string session_of(const fs::path& p1_path) {
  std::string name = p1_path.filename().string();
  const std::string suffix = ".p1.csv";
  if (name.size() > suffix.size() && name.ends_with(suffix)) return name.substr(0, name.size() - suffix.size());
  return p1_path.stem().string();
}

/// Loads a pair of person CSVs; a "<session>.meta" sidecar next to the first, when present,
/// supplies participant ids and the frame rate.
inline DyadRecording load_recording(const fs::path& path_p1, const fs::path& path_p2) {
  const std::string session = session_of(path_p1);
  SessionMeta meta{session + ".p1", session + ".p2", kTargetFps};
  const fs::path meta_path = path_p1.parent_path() / (session + ".meta");
  if (fs::exists(meta_path)) meta = read_meta(meta_path);
  PersonTrack p1 = load_person_csv(path_p1);
  PersonTrack p2 = load_person_csv(path_p2);
  p1.fps = p2.fps = meta.fps;
  DyadRecording rec = make_recording(session, std::move(p1), std::move(p2));
  rec.participant_p1 = meta.participant_p1;
  rec.participant_p2 = meta.participant_p2;
  return rec;
}

inline DyadRecording load_session(const fs::path& dir, const std::string& session) {
  return load_recording(dir / (session + ".p1.csv"), dir / (session + ".p2.csv"));
}

/// Session ids in a corpus directory (those with both person files), sorted.
inline std::vector<std::string> list_sessions(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a corpus directory: " + dir.string());
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!name.ends_with(".p1.csv")) continue;
    const std::string session = session_of(entry.path());
    if (fs::exists(dir / (session + ".p2.csv"))) out.push_back(session);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void write_session(const fs::path& dir, const DyadRecording& rec) {
  rec.check();
  fs::create_directories(dir);
  write_person_csv(dir / (rec.session_id + ".p1.csv"), rec.p1);
  write_person_csv(dir / (rec.session_id + ".p2.csv"), rec.p2);
  write_meta(dir / (rec.session_id + ".meta"), SessionMeta{rec.participant_p1, rec.participant_p2, rec.fps()});
}

}  // namespace amii::feat
