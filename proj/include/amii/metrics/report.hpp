// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "amii/error.hpp"
#include "amii/feat/csv.hpp"
#include "amii/feat/frames.hpp"
#include "amii/metrics/basic.hpp"
#include "amii/metrics/sync.hpp"

namespace amii::metrics {

/// Interaction measures for one (agent, user) AU12 pair.
struct PairScores {
  double tlcc = 0;
  double tlcc_lag = 0;
  double dtw = 0;
  double sync = 0;
  double el = 0;
};

struct MetricsReport {
  std::size_t frames = 0;
  FeatureScores mae, rmse, ks;  // predicted A vs ground-truth A
  PairScores pred;              // predicted A with ground-truth U
  PairScores gt;                // ground-truth A with ground-truth U
  PairScores delta;             // pred - gt
  ChunkSpec spec;               // as requested
  std::size_t tlcc_chunks = 0;
  std::size_t dtw_chunk = 0;  // frames actually used; shrinks to the series when shorter than one chunk
  std::size_t dtw_stride = 0;
  std::size_t dtw_chunks = 0;
  std::size_t sync_windows = 0;
};

namespace detail {

inline std::vector<double> au12(std::span<const FaceFrame> frames) {
  std::vector<double> out(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) out[i] = frames[i].au12();
  return out;
}

inline PairScores pair_scores(std::span<const double> a, std::span<const double> u, const ChunkSpec& spec,
                              std::size_t dtw_chunk, std::size_t dtw_stride) {
  PairScores p;
  const TlccResult t = tlcc(a, u, spec);
  p.tlcc = t.corr;
  p.tlcc_lag = t.lag;
  p.dtw = dtw_chunked(a, u, dtw_chunk, dtw_stride).cost;
  const SyncResult s = sync_score(a, u, spec);
  p.sync = static_cast<double>(s.score);
  p.el = static_cast<double>(entrainment_loop(s.events));
  return p;
}

}  // namespace detail

/// Appropriateness on (pred_a, gt_a); resemblance on (pred_a, gt_u) against
/// the reference pair (gt_a, gt_u). Series shorter than one DTW chunk are
/// scored as a single chunk spanning the whole series.
inline MetricsReport evaluate(std::span<const FaceFrame> pred_a, std::span<const FaceFrame> gt_a,
                              std::span<const FaceFrame> gt_u, const ChunkSpec& spec = {}) {
  spec.validate();
  if (pred_a.size() != gt_a.size() || gt_a.size() != gt_u.size())
    throw DataError("evaluate: misaligned lengths: prediction " + std::to_string(pred_a.size()) + ", agent truth " +
                    std::to_string(gt_a.size()) + ", user truth " + std::to_string(gt_u.size()));
  MetricsReport r;
  r.frames = pred_a.size();
  r.spec = spec;
  r.mae = mae(pred_a, gt_a);
  r.rmse = rmse(pred_a, gt_a);
  r.ks = ks_features(pred_a, gt_a);

  r.dtw_chunk = std::min(spec.dtw_chunk(), r.frames);
  r.dtw_stride = std::min(spec.dtw_stride(), r.dtw_chunk);
  const auto pa = detail::au12(pred_a), ga = detail::au12(gt_a), gu = detail::au12(gt_u);
  r.pred = detail::pair_scores(pa, gu, spec, r.dtw_chunk, r.dtw_stride);
  r.gt = detail::pair_scores(ga, gu, spec, r.dtw_chunk, r.dtw_stride);
  r.delta = {r.pred.tlcc - r.gt.tlcc, r.pred.tlcc_lag - r.gt.tlcc_lag, r.pred.dtw - r.gt.dtw, r.pred.sync - r.gt.sync,
             r.pred.el - r.gt.el};
  r.tlcc_chunks = tlcc(pa, gu, spec).chunks;
  r.dtw_chunks = (r.frames - r.dtw_chunk) / r.dtw_stride + 1;
  r.sync_windows = (r.frames - spec.sync_window()) / spec.sync_stride() + 1;
  return r;
}

/// Chunk parameters as key=value pairs, requested and effective.
inline std::vector<std::pair<std::string, std::string>> spec_fields(const MetricsReport& r) {
  using feat::format_double;
  const ChunkSpec& s = r.spec;
  return {{"fps", format_double(s.fps)},
          {"tlcc_chunk_s", format_double(s.tlcc_chunk_s)},
          {"tlcc_lag_s", format_double(s.tlcc_max_lag_s)},
          {"min_overlap_s", format_double(s.min_overlap_s)},
          {"dtw_chunk_s", format_double(s.dtw_chunk_s)},
          {"dtw_stride_s", format_double(s.dtw_stride_s)},
          {"sync_window_s", format_double(s.sync_window_s)},
          {"sync_stride_s", format_double(s.sync_stride_s)},
          {"sync_lag_s", format_double(s.sync_max_lag_s)},
          {"sync_threshold", format_double(s.sync_threshold)},
          {"tlcc_chunk_frames", std::to_string(s.tlcc_chunk())},
          {"tlcc_lag_frames", std::to_string(s.tlcc_max_lag())},
          {"dtw_chunk_frames_effective", std::to_string(r.dtw_chunk)},
          {"dtw_stride_frames_effective", std::to_string(r.dtw_stride)},
          {"tlcc_chunks", std::to_string(r.tlcc_chunks)},
          {"dtw_chunks", std::to_string(r.dtw_chunks)},
          {"sync_windows", std::to_string(r.sync_windows)},
          {"frames", std::to_string(r.frames)}};
}

/// One row per metric and feature: metric,feature,value.
inline std::string report_csv(const MetricsReport& r) {
  using feat::format_double;
  std::ostringstream os;
  os << "metric,feature,value\n";
  auto scores = [&](const char* name, const FeatureScores& s) {
    for (std::size_t f = 0; f < kFaceDim; ++f)
      os << name << ',' << feat::kFaceColumns[f] << ',' << format_double(s.per_feature[f]) << '\n';
    os << name << ",mean," << format_double(s.mean) << '\n';
  };
  scores("mae", r.mae);
  scores("rmse", r.rmse);
  scores("ks", r.ks);
  auto pair = [&](const char* suffix, const PairScores& p) {
    os << "tlcc" << suffix << ",au12," << format_double(p.tlcc) << '\n'
       << "tlcc_lag" << suffix << ",au12," << format_double(p.tlcc_lag) << '\n'
       << "dtw" << suffix << ",au12," << format_double(p.dtw) << '\n'
       << "sync" << suffix << ",au12," << format_double(p.sync) << '\n'
       << "el" << suffix << ",au12," << format_double(p.el) << '\n';
  };
  pair("", r.pred);
  pair("_gt", r.gt);
  pair("_delta", r.delta);
  for (const auto& [k, v] : spec_fields(r)) os << "spec," << k << ',' << v << '\n';
  return os.str();
}

inline std::string report_summary(const MetricsReport& r) {
  auto fixed = [](double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "frames: " << r.frames << '\n'
     << "appropriateness (predicted A vs A):\n"
     << "  MAE  " << fixed(r.mae.mean, 4) << '\n'
     << "  RMSE " << fixed(r.rmse.mean, 4) << '\n'
     << "  KS   " << fixed(r.ks.mean, 4) << '\n'
     << "resemblance (AU12 with U)   predicted   ground truth   delta\n";
  auto line = [&](const char* name, double p, double g, double d, int digits) {
    os << "  " << name << std::string(27 - std::string(name).size(), ' ') << fixed(p, digits) << "   " << fixed(g, digits)
       << "   " << fixed(d, digits) << '\n';
  };
  line("TLCC", r.pred.tlcc, r.gt.tlcc, r.delta.tlcc, 3);
  line("TLCC lag (frames)", r.pred.tlcc_lag, r.gt.tlcc_lag, r.delta.tlcc_lag, 1);
  line("DTW", r.pred.dtw, r.gt.dtw, r.delta.dtw, 1);
  line("Sync", r.pred.sync, r.gt.sync, r.delta.sync, 1);
  line("EL", r.pred.el, r.gt.el, r.delta.el, 1);
  os << "chunking:";
  for (const auto& [k, v] : spec_fields(r)) os << ' ' << k << '=' << v;
  os << '\n';
  return os.str();
}

/// A row of the model comparison table.
struct TableRow {
  std::string name;
  double mae = 0, rmse = 0, ks = 0, tlcc = 0, dtw = 0, sync = 0, el = 0;
};

inline constexpr const char* kTableHeader = "model,MAE,RMSE,KS,TLCC,DTW,Sync,EL";

inline TableRow model_row(std::string name, const MetricsReport& r) {
  return {std::move(name), r.mae.mean, r.rmse.mean, r.ks.mean, r.pred.tlcc, r.pred.dtw, r.pred.sync, r.pred.el};
}

/// Reference row: the ground-truth pair, with zero appropriateness error.
inline TableRow gt_row(const MetricsReport& r) { return {"GT", 0, 0, 0, r.gt.tlcc, r.gt.dtw, r.gt.sync, r.gt.el}; }

/// Three decimals for the error and correlation columns, one for DTW, Sync and EL.
inline std::string table_csv(std::span<const TableRow> rows) {
  std::ostringstream os;
  os << kTableHeader << '\n';
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.3f,%.3f,%.3f,%.3f,%.1f,%.1f,%.1f\n", r.name.c_str(), r.mae, r.rmse, r.ks, r.tlcc,
                  r.dtw, r.sync, r.el);
    os << buf;
  }
  return os.str();
}

}  // namespace amii::metrics
