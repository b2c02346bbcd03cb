// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "amii/error.hpp"
#include "amii/feat/frames.hpp"

namespace amii::feat {

struct RecordingInfo {
  std::string session_id;
  std::string participant_p1;
  std::string participant_p2;
  std::size_t frames = 0;
};

inline RecordingInfo info_of(const DyadRecording& rec) {
  return {rec.session_id, rec.participant_p1, rec.participant_p2, rec.size()};
}

struct SplitRatios {
  double train = 0.70;
  double val = 0.10;
  double test = 0.20;
};

/// Indices into the recording list for each partition.
struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

namespace detail {

inline std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace detail

/// Splits at recording granularity so that no participant in the test split
/// appears in train or val. Sessions sharing a participant form a group that
/// moves as a unit into or out of test; groups and sessions are visited in a
/// seeded order and added greedily while they bring the frame share closer to
/// its target.
inline DatasetSplit split_dataset(std::span<const RecordingInfo> recs, const SplitRatios& ratios,
                                  std::uint64_t seed) {
  if (recs.size() < 3) throw SplitError("split_dataset: need at least 3 recordings, got " + std::to_string(recs.size()));

  const std::size_t n = recs.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::map<std::string, std::size_t> first_seen;
  for (std::size_t i = 0; i < n; ++i) {
    for (const std::string* p : {&recs[i].participant_p1, &recs[i].participant_p2}) {
      auto [it, inserted] = first_seen.emplace(*p, i);
      if (!inserted) parent[detail::find_root(parent, i)] = detail::find_root(parent, it->second);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups_by_root;
  for (std::size_t i = 0; i < n; ++i) groups_by_root[detail::find_root(parent, i)].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [root, members] : groups_by_root) groups.push_back(std::move(members));
  if (groups.size() < 2)
    throw SplitError("split_dataset: every recording shares participants; a participant-disjoint test split is infeasible");

  double total = 0;
  for (const auto& r : recs) total += static_cast<double>(r.frames);
  auto frames_of = [&](const std::vector<std::size_t>& members) {
    double f = 0;
    for (std::size_t i : members) f += static_cast<double>(recs[i].frames);
    return f;
  };

  std::mt19937_64 rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  std::vector<bool> in_test(groups.size(), false);
  const double test_target = ratios.test * total;
  double test_frames = 0;
  std::size_t test_groups = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (test_groups + 1 == groups.size()) break;  // keep one group for training
    const double f = frames_of(groups[g]);
    if (std::abs(test_frames + f - test_target) < std::abs(test_frames - test_target)) {
      in_test[g] = true;
      test_frames += f;
      ++test_groups;
    }
  }
  if (test_groups == 0) {
    // Nothing moved closer to the target; take the smallest group so test is never empty.
    std::size_t best = 0;
    for (std::size_t g = 1; g < groups.size(); ++g)
      if (frames_of(groups[g]) < frames_of(groups[best])) best = g;
    in_test[best] = true;
  }

  DatasetSplit split;
  std::vector<std::size_t> rest;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i : groups[g]) (in_test[g] ? split.test : rest).push_back(i);
  }

  std::shuffle(rest.begin(), rest.end(), rng);
  const double val_target = ratios.val * total;
  double val_frames = 0;
  for (std::size_t k = 0; k < rest.size(); ++k) {
    const std::size_t i = rest[k];
    const double f = static_cast<double>(recs[i].frames);
    const bool last_for_train = split.train.empty() && k + 1 == rest.size();
    if (!last_for_train && std::abs(val_frames + f - val_target) < std::abs(val_frames - val_target)) {
      split.val.push_back(i);
      val_frames += f;
    } else {
      split.train.push_back(i);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace amii::feat
