// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <regex>
#include <sys/wait.h>

#include "amii/cli/commands.hpp"
#include "test_util.hpp"

using namespace amii;
using namespace amii::cli;
using amii::testing::read_file;
using amii::testing::TempDir;
using amii::testing::write_file;
namespace fs = std::filesystem;

namespace {

std::size_t data_rows(const fs::path& csv) {
  const std::string text = read_file(csv);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) - 1;
}

Settings tiny_model() {
  return {{"window", "10"}, {"cell", "4"}, {"heads", "2"}, {"decoder_hidden", "6"}};
}

Settings tiny_training(const fs::path& corpus, const fs::path& out) {
  Settings s = tiny_model();
  s.insert({{"corpus", corpus.string()}, {"out", out.string()}, {"epochs", "2"}, {"batch_size", "16"},
            {"window_stride", "25"}, {"step_factor", "1"}, {"seed", "4"}});
  return s;
}

// One small corpus and one trained model shared by the whole suite.
class CliFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    cmd_synth({{"out", corpus().string()}, {"sessions", "6"}, {"duration", "20"}, {"seed", "2"}});
    run_dir_ = cmd_train(tiny_training(corpus(), root() / "runs"));
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path root() { return dir_->path(); }
  static fs::path corpus() { return root() / "corpus"; }
  static fs::path run_dir() { return run_dir_; }

  static inline TempDir* dir_ = nullptr;
  static inline fs::path run_dir_;
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AMII_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Settings, ParseAndResolve) {
  const Settings file = parse_settings("# comment\nseed = 3\n\nout=/tmp/x  # trailing\n", "test");
  EXPECT_EQ(file.at("seed"), "3");
  EXPECT_EQ(file.at("out"), "/tmp/x");
  EXPECT_THROW(parse_settings("no equals sign\n", "test"), ConfigError);
  const Settings r = resolve(synth_spec(), file, {{"seed", "9"}});
  EXPECT_EQ(r.at("seed"), "9");
  EXPECT_EQ(r.at("sessions"), "3");
  try {
    resolve(synth_spec(), {{"sesions", "3"}}, {});
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("sesions"), std::string::npos);
    for (const char* key : {"out", "seed", "sessions", "duration", "lag", "coupling", "noise"})
      EXPECT_NE(msg.find(key), std::string::npos) << key;
  }
}

TEST(Settings, TypedGetters) {
  const Settings s = {{"a", "12"}, {"b", "2s"}, {"c", "0.5"}, {"d", "yes"}, {"e", "x"}, {"f", ""}};
  EXPECT_EQ(get_size(s, "a"), 12u);
  EXPECT_EQ(get_seconds(s, "b"), 2.0);
  EXPECT_EQ(get_seconds(s, "c"), 0.5);
  EXPECT_TRUE(get_bool(s, "d"));
  EXPECT_THROW(get_size(s, "e"), ConfigError);
  EXPECT_THROW(get_double(s, "e"), ConfigError);
  EXPECT_THROW(get_bool(s, "e"), ConfigError);
  EXPECT_THROW(require(s, "f"), ConfigError);
}

TEST(Synth, WritesCorpusDeterministically) {
  TempDir dir("synth");
  const Settings s = {{"out", (dir / "a").string()}, {"sessions", "3"}, {"duration", "60"}, {"seed", "1"}};
  cmd_synth(s);
  Settings s2 = s;
  s2["out"] = (dir / "b").string();
  cmd_synth(s2);
  std::size_t csv = 0, meta = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const std::string name = e.path().filename().string();
    if (e.path().extension() == ".csv") {
      ++csv;
      EXPECT_EQ(data_rows(e.path()), 1501u) << name;
      EXPECT_EQ(read_file(e.path()), read_file(dir / "b" / name));
    }
    if (e.path().extension() == ".meta") ++meta;
  }
  EXPECT_EQ(csv, 6u);
  EXPECT_EQ(meta, 3u);
  const std::string manifest = read_file(dir / "a" / "manifest.txt");
  EXPECT_NE(manifest.find("# command: synth"), std::string::npos);
  EXPECT_NE(manifest.find("seed=1\n"), std::string::npos);
}

TEST(Synth, ManifestReproducesOutput) {
  TempDir dir("synth-manifest");
  cmd_synth({{"out", (dir / "a").string()}, {"sessions", "1"}, {"duration", "10"}, {"seed", "5"}, {"lag", "3"}});
  Settings again = load_settings(dir / "a" / "manifest.txt");
  again["out"] = (dir / "b").string();
  cmd_synth(again);
  EXPECT_EQ(read_file(dir / "a" / "session_000.p2.csv"), read_file(dir / "b" / "session_000.p2.csv"));
}

TEST(Preprocess, RoundTripsAndChecksInput) {
  TempDir dir("prep");
  cmd_synth({{"out", (dir / "raw").string()}, {"sessions", "2"}, {"duration", "10"}});
  cmd_preprocess({{"in", (dir / "raw").string()}, {"out", (dir / "clean").string()}});
  EXPECT_EQ(feat::list_sessions(dir / "clean").size(), 2u);
  EXPECT_EQ(feat::load_session(dir / "clean", "session_000").size(), 251u);
  EXPECT_THROW(cmd_preprocess({{"in", (dir / "nope").string()}, {"out", (dir / "x").string()}}), ConfigError);
}

TEST_F(CliFixture, TrainWritesRunDirectory) {
  EXPECT_EQ(run_dir().filename(), "run-full-seed4");
  for (const char* f : {"best.ckpt", "final.ckpt", "train_log.csv", "loss.svg", "split.csv", "manifest.txt"})
    EXPECT_TRUE(fs::exists(run_dir() / f)) << f;
  EXPECT_EQ(train::load_log_csv(run_dir() / "train_log.csv").size(), 2u);
}

TEST_F(CliFixture, TrainIsDeterministic) {
  TempDir other("cli-train2");
  const fs::path again = cmd_train(tiny_training(corpus(), other.path()));
  EXPECT_EQ(read_file(again / "final.ckpt"), read_file(run_dir() / "final.ckpt"));
  EXPECT_EQ(read_file(again / "train_log.csv"), read_file(run_dir() / "train_log.csv"));
}

TEST_F(CliFixture, TrainRecordsAblation) {
  TempDir other("cli-train3");
  Settings s = tiny_training(corpus(), other.path());
  s["ablation"] = "noE_inter";
  s["epochs"] = "1";
  const fs::path dir = cmd_train(s);
  EXPECT_EQ(dir.filename(), "run-noE_inter-seed4");
  const train::Checkpoint ck = train::load_checkpoint(dir / "best.ckpt");
  EXPECT_FALSE(ck.config.use_inter_encoder);
  EXPECT_TRUE(ck.config.use_dual_cross_attention);
}

TEST_F(CliFixture, TrainConfigErrors) {
  Settings s = tiny_training(root() / "missing", root() / "x");
  EXPECT_THROW(cmd_train(s), ConfigError);
  s.erase("corpus");
  EXPECT_THROW(cmd_train(s), ConfigError);
  s = tiny_training(corpus(), root() / "x");
  s["learning_rate"] = "1";
  EXPECT_THROW(cmd_train(s), ConfigError);
  s.erase("learning_rate");
  s["ablation"] = "noE_everything";
  EXPECT_THROW(cmd_train(s), ConfigError);
}

TEST_F(CliFixture, InferWritesRequestedRows) {
  TempDir out("cli-infer");
  const Settings s = {{"checkpoint", (run_dir() / "best.ckpt").string()},
                      {"corpus", corpus().string()},
                      {"session", "session_001"},
                      {"t_out", "25"},
                      {"out", out.path().string()}};
  const fs::path p = cmd_infer(s);
  EXPECT_EQ(p.filename(), "session_001.p1.pred.csv");
  EXPECT_EQ(data_rows(p), 25u);
  const feat::FaceSeries series = feat::load_face_csv(p);
  EXPECT_EQ(series.frames.front(), 10);
  EXPECT_EQ(series.frames.back(), 34);
  const std::string first = read_file(p);
  cmd_infer(s);
  EXPECT_EQ(read_file(p), first);

  Settings too_long = s;
  too_long["t_out"] = "492";  // 10 + 492 > 501 frames
  EXPECT_THROW(cmd_infer(too_long), TruncationError);
  Settings bad_session = s;
  bad_session["session"] = "session_999";
  EXPECT_THROW(cmd_infer(bad_session), Error);
}

TEST_F(CliFixture, EvalConsumesInferOutput) {
  TempDir out("cli-eval");
  const fs::path pred = cmd_infer({{"checkpoint", (run_dir() / "best.ckpt").string()},
                                   {"corpus", corpus().string()},
                                   {"session", "session_002"},
                                   {"agent", "p2"},
                                   {"t_out", "250"},
                                   {"out", out.path().string()}});
  const metrics::MetricsReport r = cmd_eval({{"pred", pred.string()},
                                             {"corpus", corpus().string()},
                                             {"session", "session_002"},
                                             {"agent", "p2"},
                                             {"checkpoint", (run_dir() / "best.ckpt").string()},
                                             {"log", (run_dir() / "train_log.csv").string()},
                                             {"tlcc_lag", "1s"},
                                             {"out", (out / "eval").string()}});
  EXPECT_EQ(r.frames, 250u);
  EXPECT_EQ(r.spec.tlcc_max_lag(), 25u);
  EXPECT_GT(r.mae.mean, 0.0);
  for (double v : {r.pred.tlcc, r.pred.dtw, r.pred.sync, r.pred.el, r.gt.tlcc, r.gt.dtw}) EXPECT_TRUE(std::isfinite(v));
  const std::string csv = read_file(out / "eval" / "report.csv");
  EXPECT_NE(csv.find("spec,tlcc_lag_s,1\n"), std::string::npos);
  EXPECT_NE(csv.find("spec,tlcc_lag_frames,25\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "eval" / "report.txt"));
  EXPECT_TRUE(fs::exists(out / "eval" / "loss.svg"));

  const std::string svg = read_file(out / "eval" / "au12.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  const std::regex poly("<polyline");
  EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), poly), std::sregex_iterator()), 3);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '<'), std::count(svg.begin(), svg.end(), '>'));
}

TEST_F(CliFixture, EvalOfGroundTruthIsPerfect) {
  TempDir out("cli-eval-gt");
  const feat::DyadRecording rec = feat::load_session(corpus(), "session_000");
  feat::FaceSeries truth;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    truth.frames.push_back(static_cast<long long>(i));
    truth.face.push_back(rec.p1.face[i]);
  }
  feat::write_face_csv(out / "truth.csv", truth);
  const metrics::MetricsReport r = cmd_eval({{"pred", (out / "truth.csv").string()},
                                             {"corpus", corpus().string()},
                                             {"session", "session_000"},
                                             {"out", (out / "eval").string()}});
  EXPECT_EQ(r.mae.mean, 0.0);
  EXPECT_EQ(r.rmse.mean, 0.0);
  EXPECT_EQ(r.ks.mean, 0.0);
  EXPECT_EQ(r.delta.tlcc, 0.0);
  EXPECT_EQ(r.delta.dtw, 0.0);
  EXPECT_EQ(r.delta.sync, 0.0);
  EXPECT_EQ(r.delta.el, 0.0);
}

TEST_F(CliFixture, EvalRejectsMisalignedPrediction) {
  TempDir out("cli-eval-bad");
  const feat::DyadRecording rec = feat::load_session(corpus(), "session_000");
  feat::FaceSeries pred;
  for (std::size_t i = 0; i < 300; ++i) {
    pred.frames.push_back(static_cast<long long>(300 + i));
    pred.face.push_back(rec.p1.face[i]);
  }
  feat::write_face_csv(out / "pred.csv", pred);
  try {
    cmd_eval({{"pred", (out / "pred.csv").string()},
              {"corpus", corpus().string()},
              {"session", "session_000"},
              {"out", (out / "eval").string()}});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("300 frames"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("501 frames"), std::string::npos) << e.what();
  }
}

TEST_F(CliFixture, AblateProducesTable) {
  TempDir out("cli-ablate");
  Settings s = tiny_training(corpus(), out.path());
  s["epochs"] = "1";
  s["t_out"] = "250";
  s["eval_sessions"] = "1";
  const AblationOutcome a = cmd_ablate(s);
  ASSERT_EQ(a.rows.size(), 5u);
  EXPECT_EQ(a.rows[0].name, "full");
  EXPECT_EQ(a.rows[3].name, "noE_inter");
  EXPECT_EQ(a.rows[4].name, "GT");
  std::istringstream in(a.table);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "model,MAE,RMSE,KS,TLCC,DTW,Sync,EL");
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7) << line;
    EXPECT_EQ(line.find("nan"), std::string::npos) << line;
  }
  EXPECT_EQ(n, 5u);
  EXPECT_EQ(read_file(a.dir / "ablation.csv"), a.table);
  for (const char* v : {"full", "noE_m", "noE_dual", "noE_inter"}) EXPECT_TRUE(fs::exists(a.dir / v / "best.ckpt"));
}

TEST_F(CliFixture, ExitCodes) {
  const std::string c = "--corpus " + corpus().string();
  EXPECT_EQ(run_cli("synth --out " + (root() / "exit-synth").string() + " --sessions 1 --duration 10"), 0);
  EXPECT_EQ(run_cli("train --corpus " + (root() / "missing").string() + " --out " + root().string()), 2);
  EXPECT_EQ(run_cli("synth --bogus 1"), 2);
  write_file(root() / "bad.cfg", "sessions=1\nvelocity=3\n");
  EXPECT_EQ(run_cli("synth --config " + (root() / "bad.cfg").string() + " --out " + root().string()), 2);
  EXPECT_EQ(run_cli("infer --checkpoint " + (run_dir() / "best.ckpt").string() + " " + c +
                    " --session session_000 --t_out 600 --out " + (root() / "exit-infer").string()),
            3);
  write_file(root() / "junk.ckpt", "not a checkpoint");
  EXPECT_EQ(run_cli("infer --checkpoint " + (root() / "junk.ckpt").string() + " " + c +
                    " --session session_000 --t_out 5 --out " + (root() / "exit-infer").string()),
            3);
  EXPECT_EQ(run_cli("infer --checkpoint " + (run_dir() / "best.ckpt").string() + " " + c +
                    " --session session_000 --t_out 5 --out " + (root() / "exit-infer").string()),
            0);
  EXPECT_TRUE(fs::exists(root() / "exit-infer" / "session_000.p1.pred.csv"));
}

TEST(Svg, WellFormedPlot) {
  const std::vector<Series> series = {{"a<b", "#000", {0, 1, 2}}, {"c&d", "#111", {2, 1, 0}}};
  const std::string svg = svg_line_plot("t \"x\"", "time", series, 0, 0.04);
  EXPECT_NE(svg.find("viewBox"), std::string::npos);
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
  EXPECT_NE(svg.find("c&amp;d"), std::string::npos);
  EXPECT_EQ(svg.find("a<b"), std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
  EXPECT_EQ(polylines, 2u);
}
