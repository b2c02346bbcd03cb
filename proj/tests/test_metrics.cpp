// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "amii/feat/synth.hpp"
#include "amii/metrics/report.hpp"
#include "oracles.hpp"

using namespace amii;
using namespace amii::metrics;
using feat::FaceFrame;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Noise-free dyad whose p2 AU12 trails p1's by `lag` frames.
feat::DyadRecording clean_dyad(std::uint64_t seed, double seconds, std::size_t lag) {
  feat::SynthOptions o;
  o.seed = seed;
  o.duration_s = seconds;
  o.lag_frames = lag;
  o.coupling = 1.0;
  o.noise = 0.0;
  return feat::synth_dyad(o);
}

std::vector<FaceFrame> frames_from(const std::vector<double>& au12, std::uint64_t seed) {
  const auto other = noise(au12.size() * feat::kFaceDim, seed);
  std::vector<FaceFrame> out(au12.size());
  for (std::size_t i = 0; i < au12.size(); ++i) {
    for (std::size_t f = 0; f < feat::kFaceDim; ++f) out[i].v[f] = other[i * feat::kFaceDim + f];
    out[i].v[feat::kAu12] = au12[i];
  }
  return out;
}

}  // namespace

TEST(Mae, ExamplesAndErrors) {
  const auto a = frames_from(noise(50, 1), 2);
  EXPECT_EQ(mae(a, a).mean, 0.0);
  EXPECT_EQ(rmse(a, a).mean, 0.0);
  auto b = a;
  for (auto& f : b) f.v[3] += 0.75;
  const FeatureScores s = mae(b, a);
  EXPECT_NEAR(s.per_feature[3], 0.75, 1e-12);
  EXPECT_EQ(s.per_feature[0], 0.0);
  EXPECT_NEAR(s.mean, 0.075, 1e-12);
  EXPECT_THROW(mae(std::span(a).first(10), a), DataError);
  EXPECT_THROW(rmse(std::span<const FaceFrame>(), std::span<const FaceFrame>()), DataError);
}

TEST(Rmse, HandArithmetic) {
  std::vector<FaceFrame> p(2), t(2);
  p[0].v[0] = 3;
  p[1].v[0] = -4;
  EXPECT_NEAR(rmse(p, t).per_feature[0], std::sqrt(12.5), 1e-15);
  EXPECT_NEAR(mae(p, t).per_feature[0], 3.5, 1e-15);
}

TEST(Rmse, NeverBelowMae) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto a = frames_from(noise(30, s), s + 100), b = frames_from(noise(30, s + 200), s + 300);
    const FeatureScores m = mae(a, b), r = rmse(a, b);
    for (std::size_t f = 0; f < feat::kFaceDim; ++f) EXPECT_LE(m.per_feature[f], r.per_feature[f] + 1e-15);
  }
}

TEST(Ks, Examples) {
  const std::vector<double> x = {1, 2, 3}, y = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(ks_two_sample(x, y), 0.25);
  EXPECT_EQ(ks_two_sample(x, x), 0.0);
  EXPECT_EQ(ks_two_sample(std::vector<double>{-3, -2}, std::vector<double>{5, 6, 7}), 1.0);
  EXPECT_THROW(ks_two_sample(std::vector<double>{}, x), DataError);
}

TEST(Ks, MatchesBruteForce) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(1, 40), small(0, 5);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> x(static_cast<std::size_t>(len(rng))), y(static_cast<std::size_t>(len(rng)));
    // Small integer values force plenty of ties.
    for (double& v : x) v = rep % 2 ? small(rng) : std::normal_distribution<double>()(rng);
    for (double& v : y) v = rep % 2 ? small(rng) : std::normal_distribution<double>()(rng) + 0.3;
    const double k = ks_two_sample(x, y);
    ASSERT_NEAR(k, oracle::ks(x, y), 1e-12) << rep;
    ASSERT_GE(k, 0.0);
    ASSERT_LE(k, 1.0);
  }
}

TEST(Pcc, ExamplesAndOracle) {
  const auto x = noise(100, 3);
  std::vector<double> neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  EXPECT_NEAR(pcc(x, x), 1.0, 1e-15);
  EXPECT_NEAR(pcc(x, neg), -1.0, 1e-15);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto a = noise(50, s), b = noise(50, s + 1000);
    EXPECT_NEAR(pcc(a, b), oracle::pcc(a, b), 1e-12);
  }
  EXPECT_THROW(pcc(std::vector<double>(10, 2.0), std::vector<double>(x.begin(), x.begin() + 10)), NumericError);
  EXPECT_THROW(pcc(std::vector<double>{1}, std::vector<double>{2}), DataError);
  EXPECT_THROW(pcc(x, std::vector<double>(x.begin(), x.end() - 1)), DataError);
  EXPECT_FALSE(try_pcc(std::vector<double>(5, 1.0), std::vector<double>{1, 2, 3, 4, 5}).has_value());
}

TEST(LagPeak, SignConventionAndTieBreak) {
  const auto a = noise(300, 4);
  std::vector<double> u(300);
  for (std::size_t i = 7; i < 300; ++i) u[i] = a[i - 7];  // u trails a
  const LagPeak p = peak_lagged_correlation(a, u, 20, 100, false);
  EXPECT_TRUE(p.valid);
  EXPECT_EQ(p.lag, 7);
  EXPECT_NEAR(p.corr, 1.0, 1e-12);
  EXPECT_EQ(peak_lagged_correlation(u, a, 20, 100, false).lag, -7);

  // Period-2 signal: every even lag correlates perfectly, so lag 0 must win;
  // the odd lags tie too, and -1 beats +1 for |r|.
  std::vector<double> alt(100), flip(100);
  for (std::size_t i = 0; i < 100; ++i) alt[i] = i % 2 ? 1.0 : -1.0;
  EXPECT_EQ(peak_lagged_correlation(alt, alt, 10, 50, false).lag, 0);
  for (std::size_t i = 0; i < 100; ++i) flip[i] = -alt[i];
  EXPECT_EQ(peak_lagged_correlation(alt, flip, 10, 50, false).lag, -1);
  EXPECT_FALSE(peak_lagged_correlation(std::vector<double>(100, 1.0), alt, 10, 50, true).valid);
}

TEST(Tlcc, IdenticalSeries) {
  const auto d = clean_dyad(1, 60.0, 0);
  const auto a = feat::face_column(d.p1, feat::kAu12);
  const TlccResult r = tlcc(a, a);
  EXPECT_EQ(r.chunks, 7u);  // 1501 frames, 200-frame chunks
  EXPECT_NEAR(r.corr, 1.0, 1e-12);
  EXPECT_EQ(r.lag, 0.0);
}

TEST(Tlcc, RecoversInjectedLag) {
  for (std::size_t lag : {0u, 5u, 10u, 25u, 50u}) {
    const auto d = clean_dyad(10 + lag, 120.0, lag);
    const TlccResult r = tlcc(feat::face_column(d.p1, feat::kAu12), feat::face_column(d.p2, feat::kAu12));
    EXPECT_NEAR(r.lag, static_cast<double>(lag), 2.0) << lag;
    EXPECT_GT(r.corr, 0.9) << lag;
  }
}

TEST(Tlcc, ErrorsAndDegenerate) {
  const auto a = noise(199, 1);
  EXPECT_THROW(tlcc(a, a), DataError);
  EXPECT_THROW(tlcc(noise(400, 1), noise(401, 2)), DataError);
  const TlccResult flat = tlcc(std::vector<double>(400, 1.0), noise(400, 3));
  EXPECT_EQ(flat.valid_chunks, 0u);
  EXPECT_EQ(flat.corr, 0.0);
}

TEST(Dtw, MiniExamples) {
  const std::vector<double> a = {0, 1, 2}, u = {0, 1, 2, 2};
  EXPECT_EQ(dtw_cost(a, u), oracle::dtw_exhaustive(a, u));
  EXPECT_EQ(dtw_cost(a, u), 0.0);
  EXPECT_EQ(dtw_cost(std::vector<double>{0, 0}, std::vector<double>{1, 3}), 4.0);
  EXPECT_THROW(dtw_cost(std::vector<double>{}, a), DataError);
}

TEST(Dtw, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> len(1, 8);
  for (int rep = 0; rep < 300; ++rep) {
    const auto a = noise(len(rng), rng()), u = noise(len(rng), rng());
    const double c = dtw_cost(a, u);
    ASSERT_NEAR(c, oracle::dtw_exhaustive(a, u), 1e-12);
    ASSERT_EQ(c, dtw_cost(u, a));
    ASSERT_EQ(dtw_cost(a, a), 0.0);
  }
}

TEST(Dtw, Chunking) {
  const auto a = noise(3000, 1), u = noise(3000, 2);
  const DtwResult r = dtw(a, u);
  EXPECT_EQ(r.chunk, 1500u);
  EXPECT_EQ(r.stride, 750u);
  EXPECT_EQ(r.chunks, 3u);
  const double expect = (dtw_cost(std::span(a).subspan(0, 1500), std::span(u).subspan(0, 1500)) +
                         dtw_cost(std::span(a).subspan(750, 1500), std::span(u).subspan(750, 1500)) +
                         dtw_cost(std::span(a).subspan(1500, 1500), std::span(u).subspan(1500, 1500))) /
                        3.0;
  EXPECT_NEAR(r.cost, expect, 1e-9);
  EXPECT_THROW(dtw(noise(1499, 1), noise(1499, 2)), DataError);
}

TEST(Sync, DelayedCopyFlagsEveryWindow) {
  const auto d = clean_dyad(3, 60.0, 10);
  const SyncResult s = sync_score(feat::face_column(d.p1, feat::kAu12), feat::face_column(d.p2, feat::kAu12));
  EXPECT_EQ(s.windows, (1501u - 200u) / 50u + 1u);
  EXPECT_EQ(s.score, s.windows);
  for (const auto& e : s.events) EXPECT_EQ(e.lag_sign, 1);
  EXPECT_EQ(entrainment_loop(s.events), 0u);
}

TEST(Sync, WhiteNoiseNull) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyncResult s = sync_score(noise(7500, seed), noise(7500, seed + 500));
    EXPECT_LT(static_cast<double>(s.score), 0.1 * static_cast<double>(s.windows)) << seed;
  }
}

TEST(Sync, ConstantSeriesHasNoEvents) {
  const SyncResult s = sync_score(std::vector<double>(400, 0.5), noise(400, 1));
  EXPECT_EQ(s.score, 0u);
  EXPECT_EQ(s.windows, 5u);
  EXPECT_THROW(sync_score(noise(199, 1), noise(199, 2)), DataError);
}

TEST(Sync, ThresholdIsConfigurable) {
  ChunkSpec spec;
  spec.sync_threshold = 0.0;
  const SyncResult s = sync_score(noise(400, 1), noise(400, 2), spec);
  EXPECT_EQ(s.score, s.windows);
}

TEST(EntrainmentLoop, CountsAlternations) {
  auto ev = [](std::initializer_list<int> signs) {
    std::vector<SyncEvent> out;
    for (int s : signs) out.push_back({out.size(), 0.9, s});
    return out;
  };
  EXPECT_EQ(entrainment_loop(ev({1, -1, 1, -1})), 3u);
  EXPECT_EQ(entrainment_loop(ev({})), 0u);
  EXPECT_EQ(entrainment_loop(ev({1, 1, 1})), 0u);
  EXPECT_EQ(entrainment_loop(ev({1, 0, -1, 0, 0, -1, 1})), 2u);
  EXPECT_EQ(entrainment_loop(ev({0, 0})), 0u);
}

TEST(EntrainmentLoop, BidirectionalConstruction) {
  // Leadership flips every 400 frames: u trails a by 8, then a trails u by 8.
  const auto base = noise(2400, 5);
  std::vector<double> a(2400), u(2400);
  for (std::size_t i = 0; i < 2400; ++i) {
    const bool a_leads = (i / 400) % 2 == 0;
    const std::size_t back = i >= 8 ? i - 8 : 0;
    a[i] = a_leads ? base[i] : base[back];
    u[i] = a_leads ? base[back] : base[i];
  }
  const SyncResult s = sync_score(a, u);
  EXPECT_GT(entrainment_loop(s.events), 0u);
}

TEST(ChunkSpecValidation, Rules) {
  EXPECT_NO_THROW(ChunkSpec{}.validate());
  EXPECT_EQ(ChunkSpec{}.tlcc_chunk(), 200u);
  EXPECT_EQ(ChunkSpec{}.tlcc_max_lag(), 50u);
  EXPECT_EQ(ChunkSpec{}.dtw_chunk(), 1500u);
  EXPECT_EQ(ChunkSpec{}.dtw_stride(), 750u);
  ChunkSpec s;
  s.tlcc_max_lag_s = 4;
  EXPECT_THROW(s.validate(), ConfigError);
  s = ChunkSpec{};
  s.dtw_stride_s = 61;
  EXPECT_THROW(s.validate(), ConfigError);
  s = ChunkSpec{};
  s.sync_threshold = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Evaluate, PerfectPredictionAndEcho) {
  const auto d = clean_dyad(4, 70.0, 6);
  ChunkSpec spec;
  spec.tlcc_max_lag_s = 1.0;
  const MetricsReport r = evaluate(d.p1.face, d.p1.face, d.p2.face, spec);
  EXPECT_EQ(r.mae.mean, 0.0);
  EXPECT_EQ(r.rmse.mean, 0.0);
  EXPECT_EQ(r.ks.mean, 0.0);
  EXPECT_EQ(r.delta.tlcc, 0.0);
  EXPECT_EQ(r.delta.dtw, 0.0);
  EXPECT_EQ(r.delta.sync, 0.0);
  EXPECT_EQ(r.delta.el, 0.0);
  EXPECT_TRUE(r.spec == spec);
  EXPECT_EQ(r.frames, 1751u);
  EXPECT_EQ(r.dtw_chunk, 1500u);
  EXPECT_EQ(r.dtw_chunks, 1u);
  const std::string csv = report_csv(r);
  EXPECT_EQ(csv.rfind("metric,feature,value\n", 0), 0u);
  EXPECT_NE(csv.find("spec,tlcc_lag_s,1\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("spec,tlcc_lag_frames,25\n"), std::string::npos);
  EXPECT_NE(report_summary(r).find("1751"), std::string::npos);
}

TEST(Evaluate, ShortSeriesUseOneDtwChunk) {
  const auto d = clean_dyad(5, 20.0, 3);
  const MetricsReport r = evaluate(d.p2.face, d.p1.face, d.p2.face);
  EXPECT_EQ(r.dtw_chunk, 501u);
  EXPECT_EQ(r.dtw_chunks, 1u);
  EXPECT_GE(r.mae.mean, 0.0);
  EXPECT_LE(r.pred.tlcc, 1.0);
  EXPECT_GE(r.pred.tlcc, -1.0);
  // pred == gt_u gives a perfect resemblance pair.
  EXPECT_NEAR(r.pred.tlcc, 1.0, 1e-12);
  EXPECT_EQ(r.pred.dtw, 0.0);
}

TEST(Evaluate, MisalignedLengths) {
  const auto d = clean_dyad(6, 20.0, 3);
  try {
    evaluate(std::span(d.p1.face).first(400), d.p1.face, d.p2.face);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("400"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("501"), std::string::npos);
  }
}

TEST(Table, Layout) {
  const auto d = clean_dyad(7, 20.0, 3);
  const MetricsReport r = evaluate(d.p1.face, d.p1.face, d.p2.face);
  const std::vector<TableRow> rows = {model_row("AMII", r), gt_row(r)};
  const std::string t = table_csv(rows);
  std::istringstream in(t);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kTableHeader);
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
  }
  EXPECT_EQ(n, 2);
  EXPECT_NE(t.find("GT,0.000,0.000,0.000,"), std::string::npos) << t;
}
