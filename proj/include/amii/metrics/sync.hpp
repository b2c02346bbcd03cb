// SPDX-License-Identifier: Apache-2.0
//
// Interaction-level measures on a pair of AU12 series. Lag convention: a
// positive lag L pairs a[i] with u[i + L], i.e. u trails a by L frames.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "amii/error.hpp"
#include "amii/metrics/basic.hpp"

namespace amii::metrics {

/// Chunk and window geometry, in seconds at `fps`.
struct ChunkSpec {
  double fps = 25.0;
  double tlcc_chunk_s = 8.0;
  double tlcc_max_lag_s = 2.0;
  double min_overlap_s = 4.0;  // overlap required for a lag to count
  double dtw_chunk_s = 60.0;
  double dtw_stride_s = 30.0;
  double sync_window_s = 8.0;
  double sync_stride_s = 2.0;
  double sync_max_lag_s = 2.0;
  double sync_threshold = 0.5;

  std::size_t frames(double seconds) const { return static_cast<std::size_t>(std::llround(seconds * fps)); }
  std::size_t tlcc_chunk() const { return frames(tlcc_chunk_s); }
  std::size_t tlcc_max_lag() const { return frames(tlcc_max_lag_s); }
  std::size_t min_overlap() const { return frames(min_overlap_s); }
  std::size_t dtw_chunk() const { return frames(dtw_chunk_s); }
  std::size_t dtw_stride() const { return frames(dtw_stride_s); }
  std::size_t sync_window() const { return frames(sync_window_s); }
  std::size_t sync_stride() const { return frames(sync_stride_s); }
  std::size_t sync_max_lag() const { return frames(sync_max_lag_s); }

  void validate() const {
    if (!(fps > 0)) throw ConfigError("chunk spec: fps must be positive");
    if (tlcc_chunk() == 0 || dtw_chunk() == 0 || sync_window() == 0)
      throw ConfigError("chunk spec: chunk and window lengths must be at least one frame");
    if (dtw_stride() == 0 || sync_stride() == 0) throw ConfigError("chunk spec: strides must be at least one frame");
    if (tlcc_chunk() <= 2 * tlcc_max_lag())
      throw ConfigError("chunk spec: tlcc chunk must be longer than twice the max lag");
    if (sync_window() <= 2 * sync_max_lag())
      throw ConfigError("chunk spec: sync window must be longer than twice the max lag");
    if (dtw_stride() > dtw_chunk()) throw ConfigError("chunk spec: dtw stride exceeds the chunk");
    if (sync_stride() > sync_window()) throw ConfigError("chunk spec: sync stride exceeds the window");
    if (min_overlap() < 2) throw ConfigError("chunk spec: min overlap must be at least 2 frames");
    if (!(sync_threshold >= 0 && sync_threshold <= 1)) throw ConfigError("chunk spec: sync threshold must be in [0, 1]");
  }

  bool operator==(const ChunkSpec&) const = default;
};

struct LagPeak {
  bool valid = false;  // false when no lag had a defined correlation
  double corr = 0;
  long lag = 0;
};

/// Best Pearson correlation over integer lags in [-max_lag, max_lag], both
/// series trimmed to their overlap. With `absolute`, |r| is maximized and the
/// signed r is returned. Ties go to the smallest |lag|, negative first.
inline LagPeak peak_lagged_correlation(std::span<const double> a, std::span<const double> u, std::size_t max_lag,
                                       std::size_t min_overlap, bool absolute) {
  const std::size_t n = std::min(a.size(), u.size());
  LagPeak best;
  double best_key = -std::numeric_limits<double>::infinity();
  auto visit = [&](long lag) {
    const std::size_t shift = static_cast<std::size_t>(std::abs(lag));
    if (shift >= n || n - shift < min_overlap) return;
    const std::size_t len = n - shift;
    const auto xa = lag >= 0 ? a.subspan(0, len) : a.subspan(shift, len);
    const auto xu = lag >= 0 ? u.subspan(shift, len) : u.subspan(0, len);
    const auto r = try_pcc(xa, xu);
    if (!r) return;
    const double key = absolute ? std::abs(*r) : *r;
    if (key > best_key) {
      best_key = key;
      best = {true, *r, lag};
    }
  };
  visit(0);
  for (long l = 1; l <= static_cast<long>(max_lag); ++l) {
    visit(-l);
    visit(l);
  }
  return best;
}

struct TlccResult {
  double corr = 0;  // mean peak correlation over chunks
  double lag = 0;   // mean peak lag (frames)
  std::size_t chunks = 0;
  std::size_t valid_chunks = 0;
};

/// Time-lagged cross-correlation over non-overlapping chunks. Chunks where no
/// correlation is defined (constant signal) are skipped; if none remain the
/// result is 0 at lag 0.
inline TlccResult tlcc(std::span<const double> a, std::span<const double> u, const ChunkSpec& spec = {}) {
  spec.validate();
  if (a.size() != u.size())
    throw DataError("tlcc: length mismatch " + std::to_string(a.size()) + " vs " + std::to_string(u.size()));
  const std::size_t chunk = spec.tlcc_chunk();
  if (a.size() < chunk)
    throw DataError("tlcc: " + std::to_string(a.size()) + " frames is shorter than one chunk (" +
                    std::to_string(chunk) + ")");
  TlccResult res;
  double corr = 0, lag = 0;
  for (std::size_t s = 0; s + chunk <= a.size(); s += chunk) {
    ++res.chunks;
    const LagPeak p =
        peak_lagged_correlation(a.subspan(s, chunk), u.subspan(s, chunk), spec.tlcc_max_lag(), spec.min_overlap(), false);
    if (!p.valid) continue;
    ++res.valid_chunks;
    corr += p.corr;
    lag += static_cast<double>(p.lag);
  }
  if (res.valid_chunks > 0) {
    res.corr = corr / static_cast<double>(res.valid_chunks);
    res.lag = lag / static_cast<double>(res.valid_chunks);
  }
  return res;
}

/// Classic DTW with local cost |a_i - u_j|; accumulated, not normalized.
inline double dtw_cost(std::span<const double> a, std::span<const double> u) {
  if (a.empty() || u.empty()) throw DataError("dtw: empty sequence");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(u.size() + 1, inf), cur(u.size() + 1, inf);
  prev[0] = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= u.size(); ++j)
      cur[j] = std::abs(a[i - 1] - u[j - 1]) + std::min({prev[j - 1], prev[j], cur[j - 1]});
    std::swap(prev, cur);
  }
  return prev[u.size()];
}

struct DtwResult {
  double cost = 0;  // mean over chunks
  std::size_t chunks = 0;
  std::size_t chunk = 0;
  std::size_t stride = 0;
};

inline DtwResult dtw_chunked(std::span<const double> a, std::span<const double> u, std::size_t chunk,
                             std::size_t stride) {
  if (a.size() != u.size())
    throw DataError("dtw: length mismatch " + std::to_string(a.size()) + " vs " + std::to_string(u.size()));
  if (chunk == 0 || stride == 0) throw ConfigError("dtw: chunk and stride must be positive");
  if (a.size() < chunk)
    throw DataError("dtw: " + std::to_string(a.size()) + " frames is shorter than one chunk (" +
                    std::to_string(chunk) + ")");
  DtwResult res{0, 0, chunk, stride};
  for (std::size_t s = 0; s + chunk <= a.size(); s += stride) {
    res.cost += dtw_cost(a.subspan(s, chunk), u.subspan(s, chunk));
    ++res.chunks;
  }
  res.cost /= static_cast<double>(res.chunks);
  return res;
}

inline DtwResult dtw(std::span<const double> a, std::span<const double> u, const ChunkSpec& spec = {}) {
  spec.validate();
  return dtw_chunked(a, u, spec.dtw_chunk(), spec.dtw_stride());
}

struct SyncEvent {
  std::size_t window = 0;
  double peak = 0;  // signed correlation at the peak |r|
  int lag_sign = 0;  // +1: u trails a, -1: a trails u, 0: simultaneous
};

struct SyncResult {
  std::size_t score = 0;  // number of events
  std::size_t windows = 0;
  std::vector<SyncEvent> events;
};

/// Synchrony events: sliding windows whose peak |lagged correlation| reaches
/// the threshold. Windows with undefined correlations produce no event.
inline SyncResult sync_score(std::span<const double> a, std::span<const double> u, const ChunkSpec& spec = {}) {
  spec.validate();
  if (a.size() != u.size())
    throw DataError("sync: length mismatch " + std::to_string(a.size()) + " vs " + std::to_string(u.size()));
  const std::size_t win = spec.sync_window();
  if (a.size() < win)
    throw DataError("sync: " + std::to_string(a.size()) + " frames is shorter than one window (" +
                    std::to_string(win) + ")");
  SyncResult res;
  for (std::size_t s = 0; s + win <= a.size(); s += spec.sync_stride()) {
    const std::size_t w = res.windows++;
    const LagPeak p =
        peak_lagged_correlation(a.subspan(s, win), u.subspan(s, win), spec.sync_max_lag(), spec.min_overlap(), true);
    if (!p.valid || std::abs(p.corr) < spec.sync_threshold) continue;
    res.events.push_back({w, p.corr, p.lag > 0 ? 1 : (p.lag < 0 ? -1 : 0)});
  }
  res.score = res.events.size();
  return res;
}

/// Leader alternations: consecutive signed events whose lag signs differ.
/// Zero-lag events are skipped without breaking a run.
inline std::size_t entrainment_loop(std::span<const SyncEvent> events) {
  std::size_t count = 0;
  int last = 0;
  for (const auto& e : events) {
    if (e.lag_sign == 0) continue;
    if (last != 0 && e.lag_sign != last) ++count;
    last = e.lag_sign;
  }
  return count;
}

}  // namespace amii::metrics
