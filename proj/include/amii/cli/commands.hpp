// SPDX-License-Identifier: Apache-2.0
//
// Subcommand implementations. Each takes settings (unspecified keys fall back
// to defaults), writes its outputs plus a manifest.txt, and throws amii::Error
// on failure. The executable in tools/ is a thin argument-parsing shell.
#pragma once

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "amii/cli/settings.hpp"
#include "amii/cli/svg.hpp"
#include "amii/error.hpp"
#include "amii/feat/csv.hpp"
#include "amii/feat/preprocess.hpp"
#include "amii/feat/split.hpp"
#include "amii/feat/stats.hpp"
#include "amii/feat/synth.hpp"
#include "amii/infer/rollout.hpp"
#include "amii/metrics/report.hpp"
#include "amii/model/config.hpp"
#include "amii/train/checkpoint.hpp"
#include "amii/train/trainer.hpp"

namespace amii::cli {

namespace detail {

inline std::vector<KeySpec> model_keys() {
  return {{"ablation", "full", "full | noE_m | noE_dual | noE_inter"},
          {"window", "100", "input window length (frames)"},
          {"heads", "2", "attention heads"},
          {"cell", "16", "encoder width"},
          {"decoder_hidden", "20", "decoder hidden units"}};
}

inline std::vector<KeySpec> training_keys() {
  return {{"corpus", "", "directory of 25 fps session CSVs"},
          {"out", "", "output directory"},
          {"seed", "0", "random seed"},
          {"epochs", "300", "training epochs"},
          {"batch_size", "32", "minibatch size"},
          {"window_stride", "1", "use every n-th window position"},
          {"base_lr", "1e-7", "cyclical learning rate minimum"},
          {"max_lr", "1e-3", "cyclical learning rate maximum"},
          {"step_factor", "10", "half cycle length in epochs"},
          {"clip_gradients", "false", "clip the global gradient norm"},
          {"clip_norm", "1", "clipping threshold"},
          {"threads", "1", "worker threads per batch (results do not depend on it)"}};
}

inline std::vector<KeySpec> chunk_keys() {
  return {{"tlcc_chunk", "8s", "TLCC chunk length"},
          {"tlcc_lag", "2s", "TLCC max lag"},
          {"min_overlap", "4s", "overlap required at each lag"},
          {"dtw_chunk", "60s", "DTW chunk length"},
          {"dtw_stride", "30s", "DTW chunk stride"},
          {"sync_window", "8s", "synchrony window"},
          {"sync_stride", "2s", "synchrony window stride"},
          {"sync_lag", "2s", "synchrony max lag"},
          {"sync_threshold", "0.5", "synchrony event threshold on peak |r|"}};
}

template <class... Lists>
std::vector<KeySpec> join(std::vector<KeySpec> first, const Lists&... rest) {
  (first.insert(first.end(), rest.begin(), rest.end()), ...);
  return first;
}

inline model::AmiiConfig model_config(const Settings& s) {
  model::AmiiConfig cfg;
  cfg.window = get_size(s, "window");
  cfg.heads = get_size(s, "heads");
  cfg.cell = get_size(s, "cell");
  cfg.decoder_hidden = get_size(s, "decoder_hidden");
  cfg = model::with_ablation(cfg, model::parse_ablation(get(s, "ablation")));
  cfg.validate();
  return cfg;
}

inline train::TrainRunConfig run_config(const Settings& s) {
  train::TrainRunConfig run;
  run.seed = get_u64(s, "seed");
  run.epochs = get_size(s, "epochs");
  run.batch_size = get_size(s, "batch_size");
  run.window_stride = get_size(s, "window_stride");
  run.base_lr = get_double(s, "base_lr");
  run.max_lr = get_double(s, "max_lr");
  run.step_factor = get_double(s, "step_factor");
  run.clip_gradients = get_bool(s, "clip_gradients");
  run.clip_norm = get_double(s, "clip_norm");
  run.threads = get_size(s, "threads");
  run.validate();
  return run;
}

inline metrics::ChunkSpec chunk_spec(const Settings& s) {
  metrics::ChunkSpec c;
  c.tlcc_chunk_s = get_seconds(s, "tlcc_chunk");
  c.tlcc_max_lag_s = get_seconds(s, "tlcc_lag");
  c.min_overlap_s = get_seconds(s, "min_overlap");
  c.dtw_chunk_s = get_seconds(s, "dtw_chunk");
  c.dtw_stride_s = get_seconds(s, "dtw_stride");
  c.sync_window_s = get_seconds(s, "sync_window");
  c.sync_stride_s = get_seconds(s, "sync_stride");
  c.sync_max_lag_s = get_seconds(s, "sync_lag");
  c.sync_threshold = get_double(s, "sync_threshold");
  c.validate();
  return c;
}

inline fs::path corpus_dir(const Settings& s) {
  const fs::path dir = require(s, "corpus");
  if (!fs::is_directory(dir)) throw ConfigError("corpus directory does not exist: " + dir.string());
  return dir;
}

/// Loads every session of a corpus; training and inference want 25 fps input.
inline std::vector<feat::DyadRecording> load_corpus(const fs::path& dir) {
  std::vector<feat::DyadRecording> recs;
  for (const auto& id : feat::list_sessions(dir)) {
    recs.push_back(feat::load_session(dir, id));
    if (recs.back().fps() != feat::kTargetFps)
      throw DataError("session " + id + " is at " + feat::format_double(recs.back().fps()) +
                      " fps; run the preprocess command first");
  }
  if (recs.empty()) throw DataError("no sessions found in " + dir.string());
  return recs;
}

inline feat::Roles agent_role(const Settings& s) {
  const std::string& a = get(s, "agent");
  if (a == "p1") return feat::Roles::kP1AsAgent;
  if (a == "p2") return feat::Roles::kP2AsAgent;
  throw ConfigError("agent must be p1 or p2, got '" + a + "'");
}

inline const feat::PersonTrack& agent_of(const feat::DyadRecording& r, feat::Roles roles) {
  return roles == feat::Roles::kP1AsAgent ? r.p1 : r.p2;
}

inline const feat::PersonTrack& user_of(const feat::DyadRecording& r, feat::Roles roles) {
  return roles == feat::Roles::kP1AsAgent ? r.p2 : r.p1;
}

inline std::string loss_svg(std::span<const train::LogRow> log) {
  Series tr{"train loss", "#1f77b4", {}}, va{"validation loss", "#d62728", {}};
  for (const auto& r : log) {
    tr.y.push_back(r.train_loss);
    va.y.push_back(r.val_loss);
  }
  std::vector<Series> series{tr};
  bool any_val = false;
  for (double v : va.y) any_val = any_val || std::isfinite(v);
  if (any_val) series.push_back(va);
  return svg_line_plot("Loss per epoch", "epoch", series, 1, 1);
}

inline void say(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << '\n' << std::flush;
}

}  // namespace detail

inline const CommandSpec& synth_spec() {
  static const CommandSpec spec{"synth",
                                "generate a synthetic dyadic corpus",
                                {{"out", "", "output corpus directory"},
                                 {"seed", "0", "random seed"},
                                 {"sessions", "3", "number of sessions"},
                                 {"duration", "120", "session length in seconds"},
                                 {"lag", "10", "frames by which p2's AU12 trails p1's"},
                                 {"coupling", "1", "weight of the delayed copy in p2's AU12"},
                                 {"noise", "0.05", "Gaussian noise sigma"}}};
  return spec;
}

inline const CommandSpec& preprocess_spec() {
  static const CommandSpec spec{"preprocess",
                                "interpolate gaps, median filter, resample to 25 fps",
                                {{"in", "", "raw corpus directory"},
                                 {"out", "", "output corpus directory"},
                                 {"median_window", "5", "odd median filter window"}}};
  return spec;
}

inline const CommandSpec& train_spec() {
  static const CommandSpec spec{
      "train", "train a model on a corpus",
      detail::join(detail::training_keys(), detail::model_keys(),
                   std::vector<KeySpec>{{"split", "true", "hold out participant-disjoint val/test sessions"}})};
  return spec;
}

inline const CommandSpec& infer_spec() {
  static const CommandSpec spec{"infer",
                                "autoregressive rollout of the agent's face",
                                {{"checkpoint", "", "model checkpoint"},
                                 {"corpus", "", "corpus directory"},
                                 {"session", "", "session id"},
                                 {"agent", "p1", "which participant the model plays: p1 | p2"},
                                 {"t_out", "750", "frames to generate"},
                                 {"out", "", "output directory"}}};
  return spec;
}

inline const CommandSpec& eval_spec() {
  static const CommandSpec spec{"eval", "score a predicted face stream against a session",
                                detail::join(std::vector<KeySpec>{{"pred", "", "predicted face CSV"},
                                                                  {"corpus", "", "corpus directory"},
                                                                  {"session", "", "session id"},
                                                                  {"agent", "p1", "p1 | p2"},
                                                                  {"checkpoint", "-", "checkpoint whose statistics "
                                                                                      "define the standardized space "
                                                                                      "('-': the session's own)"},
                                                                  {"log", "-", "training log to plot ('-': none)"},
                                                                  {"out", "", "output directory"}},
                                             detail::chunk_keys())};
  return spec;
}

inline const CommandSpec& ablate_spec() {
  static const CommandSpec spec{
      "ablate", "train and compare the full model and its three ablations",
      detail::join(detail::training_keys(),
                   std::vector<KeySpec>{{"window", "100", "input window length (frames)"},
                                        {"heads", "2", "attention heads"},
                                        {"cell", "16", "encoder width"},
                                        {"decoder_hidden", "20", "decoder hidden units"},
                                        {"t_out", "750", "rollout length per test session"},
                                        {"eval_sessions", "0", "test sessions to score (0: all)"}},
                   detail::chunk_keys())};
  return spec;
}

inline std::vector<const CommandSpec*> all_commands() {
  return {&synth_spec(), &preprocess_spec(), &train_spec(), &infer_spec(), &eval_spec(), &ablate_spec()};
}

/// Writes <out>/session_NNN.{p1.csv,p2.csv,meta}; returns the corpus directory.
inline fs::path cmd_synth(const Settings& settings, std::ostream* log = nullptr) {
  const Settings s = resolve(synth_spec(), {}, settings);
  const fs::path out = require(s, "out");
  const std::uint64_t seed = get_u64(s, "seed");
  const std::size_t sessions = get_size(s, "sessions");
  if (sessions == 0) throw ConfigError("synth: sessions must be at least 1");
  fs::create_directories(out);
  for (std::size_t i = 0; i < sessions; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "session_%03zu", i);
    feat::SynthOptions opt;
    opt.seed = seed * 1000003ULL + i;
    opt.duration_s = get_double(s, "duration");
    opt.lag_frames = get_size(s, "lag");
    opt.coupling = get_double(s, "coupling");
    opt.noise = get_double(s, "noise");
    opt.session_id = id;
    opt.participant_p1 = std::string(id) + ".p1";
    opt.participant_p2 = std::string(id) + ".p2";
    feat::write_session(out, feat::synth_dyad(opt));
  }
  write_manifest(out, "synth", s);
  detail::say(log, "wrote " + std::to_string(sessions) + " sessions to " + out.string());
  return out;
}

inline fs::path cmd_preprocess(const Settings& settings, std::ostream* log = nullptr) {
  const Settings s = resolve(preprocess_spec(), {}, settings);
  const fs::path in = require(s, "in");
  const fs::path out = require(s, "out");
  if (!fs::is_directory(in)) throw ConfigError("input corpus directory does not exist: " + in.string());
  const std::size_t window = get_size(s, "median_window");
  const auto ids = feat::list_sessions(in);
  if (ids.empty()) throw DataError("no sessions found in " + in.string());
  for (const auto& id : ids) feat::write_session(out, feat::preprocess_recording(feat::load_session(in, id), window));
  write_manifest(out, "preprocess", s);
  detail::say(log, "preprocessed " + std::to_string(ids.size()) + " sessions into " + out.string());
  return out;
}

/// Trains into <out>/run-<ablation>-seed<seed>/ and returns that directory.
/// best.ckpt holds the parameters with the lowest validation loss, final.ckpt
/// those after the last epoch.
inline fs::path cmd_train(const Settings& settings, std::ostream* log = nullptr) {
  const Settings s = resolve(train_spec(), {}, settings);
  const fs::path corpus = detail::corpus_dir(s);
  const fs::path out = require(s, "out");
  const model::AmiiConfig cfg = detail::model_config(s);
  const train::TrainRunConfig run = detail::run_config(s);
  std::vector<feat::DyadRecording> recs = detail::load_corpus(corpus);

  feat::DatasetSplit split;
  if (get_bool(s, "split")) {
    std::vector<feat::RecordingInfo> infos;
    for (const auto& r : recs) infos.push_back(feat::info_of(r));
    split = feat::split_dataset(infos, {}, run.seed);
  } else {
    for (std::size_t i = 0; i < recs.size(); ++i) split.train.push_back(i);
  }
  std::vector<feat::DyadRecording> train_recs, val_recs;
  for (auto i : split.train) train_recs.push_back(recs[i]);
  for (auto i : split.val) val_recs.push_back(recs[i]);
  const feat::FeatureStats stats = feat::compute_stats(train_recs);
  for (auto& r : train_recs) r = feat::standardize(r, stats);
  for (auto& r : val_recs) r = feat::standardize(r, stats);

  const fs::path dir = out / ("run-" + std::string(model::ablation_name(model::ablation_of(cfg))) + "-seed" +
                              std::to_string(run.seed));
  fs::create_directories(dir);
  detail::say(log, "training " + std::string(model::ablation_name(model::ablation_of(cfg))) + " on " +
                       std::to_string(train_recs.size()) + " sessions (" + std::to_string(val_recs.size()) +
                       " validation) -> " + dir.string());
  const train::TrainResult result = train::train(run, cfg, train_recs, val_recs, [&](const train::LogRow& r) {
    detail::say(log, "epoch " + std::to_string(r.epoch) + " train " + feat::format_double(r.train_loss) + " val " +
                         feat::format_double(r.val_loss));
  });

  const std::map<std::string, std::string> extra{{"seed", std::to_string(run.seed)},
                                                 {"epochs", std::to_string(run.epochs)},
                                                 {"best_epoch", std::to_string(result.best_epoch)}};
  train::save_checkpoint({cfg, result.best_params, stats, extra}, dir / "best.ckpt");
  train::save_checkpoint({cfg, result.final_params, stats, extra}, dir / "final.ckpt");
  feat::detail::write_text(dir / "train_log.csv", train::log_csv_text(result.log));
  feat::detail::write_text(dir / "loss.svg", detail::loss_svg(result.log));
  std::string split_text;
  for (const auto& [name, idx] : {std::pair{"train", &split.train}, {"val", &split.val}, {"test", &split.test}})
    for (auto i : *idx) split_text += std::string(name) + ',' + recs[i].session_id + '\n';
  feat::detail::write_text(dir / "split.csv", "split,session\n" + split_text);
  write_manifest(dir, "train", s, {{"best_epoch", std::to_string(result.best_epoch)}});
  return dir;
}

/// Writes <out>/<session>.<agent>.pred.csv in raw units; frame numbers are
/// absolute session frames starting right after the seed window.
inline fs::path cmd_infer(const Settings& settings, std::ostream* log = nullptr) {
  const Settings s = resolve(infer_spec(), {}, settings);
  const fs::path corpus = detail::corpus_dir(s);
  const fs::path out = require(s, "out");
  const std::string session = require(s, "session");
  const feat::Roles roles = detail::agent_role(s);
  const std::size_t t_out = get_size(s, "t_out");
  const train::Checkpoint ck = train::load_checkpoint(require(s, "checkpoint"));
  const feat::DyadRecording rec = feat::load_session(corpus, session);
  if (rec.fps() != feat::kTargetFps) throw DataError("session " + session + " is not at 25 fps; preprocess it first");
  if (rec.size() < ck.config.window + t_out)
    throw TruncationError("session " + session + " has " + std::to_string(rec.size()) + " frames; " +
                          std::to_string(t_out) + " predicted frames need " + std::to_string(ck.config.window + t_out));

  feat::FaceSeries series;
  series.face = infer::rollout_session(ck.params, ck.config, ck.stats, rec, roles, t_out);
  for (std::size_t k = 0; k < t_out; ++k) series.frames.push_back(static_cast<long long>(ck.config.window + k));
  fs::create_directories(out);
  const fs::path path = out / (session + "." + get(s, "agent") + ".pred.csv");
  feat::write_face_csv(path, series);
  write_manifest(out, "infer", s);
  detail::say(log, "wrote " + std::to_string(t_out) + " frames to " + path.string());
  return path;
}

/// Scores predictions for the agent against a session, in standardized space.
inline metrics::MetricsReport evaluate_prediction(const feat::FaceSeries& pred, const feat::DyadRecording& rec,
                                                  feat::Roles roles, const feat::FeatureStats& stats,
                                                  const metrics::ChunkSpec& spec) {
  const auto& a = detail::agent_of(rec, roles).face;
  const auto& u = detail::user_of(rec, roles).face;
  if (pred.frames.empty()) throw DataError("prediction file has no frames");
  const long long first = pred.frames.front();
  for (std::size_t i = 0; i < pred.frames.size(); ++i)
    if (pred.frames[i] != first + static_cast<long long>(i))
      throw DataError("prediction frames are not consecutive at row " + std::to_string(i + 1));
  if (first < 0 || static_cast<std::size_t>(first) + pred.frames.size() > a.size())
    throw DataError("misaligned lengths: prediction covers frames " + std::to_string(first) + ".." +
                    std::to_string(first + static_cast<long long>(pred.frames.size()) - 1) + " (" +
                    std::to_string(pred.frames.size()) + " frames) but the session has " + std::to_string(a.size()) +
                    " frames");
  const auto lo = static_cast<std::size_t>(first);
  const std::vector<feat::FaceFrame> gt_a(a.begin() + lo, a.begin() + lo + pred.face.size());
  const std::vector<feat::FaceFrame> gt_u(u.begin() + lo, u.begin() + lo + pred.face.size());
  return metrics::evaluate(feat::standardize(pred.face, stats), feat::standardize(gt_a, stats),
                           feat::standardize(gt_u, stats), spec);
}

/// Writes report.csv, report.txt, au12.svg (and loss.svg given a log) to <out>.
inline metrics::MetricsReport cmd_eval(const Settings& settings, std::ostream* log = nullptr) {
  const Settings s = resolve(eval_spec(), {}, settings);
  const fs::path corpus = detail::corpus_dir(s);
  const fs::path out = require(s, "out");
  const std::string session = require(s, "session");
  const feat::Roles roles = detail::agent_role(s);
  const metrics::ChunkSpec spec = detail::chunk_spec(s);
  const feat::FaceSeries pred = feat::load_face_csv(require(s, "pred"));
  const feat::DyadRecording rec = feat::load_session(corpus, session);
  const std::string ck_path = get(s, "checkpoint");
  const feat::FeatureStats stats = ck_path.empty() || ck_path == "-"
                                       ? feat::compute_stats(std::span<const feat::DyadRecording>(&rec, 1))
                                       : train::load_checkpoint(ck_path).stats;

  const metrics::MetricsReport report = evaluate_prediction(pred, rec, roles, stats, spec);
  fs::create_directories(out);
  feat::detail::write_text(out / "report.csv", metrics::report_csv(report));
  feat::detail::write_text(out / "report.txt", metrics::report_summary(report));

  const auto lo = static_cast<std::size_t>(pred.frames.front());
  std::vector<Series> series{{"predicted A", "#d62728", {}}, {"A", "#1f77b4", {}}, {"U", "#2ca02c", {}}};
  for (std::size_t i = 0; i < pred.face.size(); ++i) {
    series[0].y.push_back(pred.face[i].au12());
    series[1].y.push_back(detail::agent_of(rec, roles).face[lo + i].au12());
    series[2].y.push_back(detail::user_of(rec, roles).face[lo + i].au12());
  }
  feat::detail::write_text(out / "au12.svg",
                           svg_line_plot("AU12 (" + session + ")", "time (s)", series, lo / 25.0, 1 / 25.0));
  const std::string log_path = get(s, "log");
  if (!log_path.empty() && log_path != "-")
    feat::detail::write_text(out / "loss.svg", detail::loss_svg(train::load_log_csv(log_path)));
  write_manifest(out, "eval", s);
  detail::say(log, metrics::report_summary(report));
  return report;
}

struct AblationOutcome {
  fs::path dir;
  std::string table;  // CSV text, also written to <dir>/ablation.csv
  std::vector<metrics::TableRow> rows;
};

/// Rollout for the agent with the user's streams replaced by a scrambled copy
/// (time-reversed, negated); used to spot-check that a model without the
/// inter-personal encoder ignores the user.
inline std::vector<feat::FaceFrame> rollout_with_scrambled_user(const train::Checkpoint& ck, const feat::DyadRecording& rec,
                                                                std::size_t t_out) {
  feat::DyadRecording scrambled = rec;
  std::reverse(scrambled.p2.speech.begin(), scrambled.p2.speech.end());
  std::reverse(scrambled.p2.face.begin(), scrambled.p2.face.end());
  for (auto& f : scrambled.p2.face)
    for (double& v : f.v) v = -v;
  return infer::rollout_session(ck.params, ck.config, ck.stats, scrambled, feat::Roles::kP1AsAgent, t_out);
}

/// Trains the full model and each ablation with one seed, rolls each out on the
/// test sessions (p1 as agent), and tabulates mean metrics plus the GT row.
inline AblationOutcome cmd_ablate(const Settings& settings, std::ostream* log = nullptr) {
  const Settings s = resolve(ablate_spec(), {}, settings);
  const fs::path corpus = detail::corpus_dir(s);
  const train::TrainRunConfig run = detail::run_config(s);
  const metrics::ChunkSpec spec = detail::chunk_spec(s);
  const std::size_t t_out = get_size(s, "t_out");
  const std::size_t eval_limit = get_size(s, "eval_sessions");
  const std::vector<feat::DyadRecording> recs = detail::load_corpus(corpus);

  std::vector<feat::RecordingInfo> infos;
  for (const auto& r : recs) infos.push_back(feat::info_of(r));
  const feat::DatasetSplit split = feat::split_dataset(infos, {}, run.seed);
  std::vector<feat::DyadRecording> train_recs, val_recs, test_recs;
  for (auto i : split.train) train_recs.push_back(recs[i]);
  for (auto i : split.val) val_recs.push_back(recs[i]);
  for (auto i : split.test)
    if (eval_limit == 0 || test_recs.size() < eval_limit) test_recs.push_back(recs[i]);
  const feat::FeatureStats stats = feat::compute_stats(train_recs);
  for (auto& r : train_recs) r = feat::standardize(r, stats);
  for (auto& r : val_recs) r = feat::standardize(r, stats);

  AblationOutcome outcome;
  outcome.dir = fs::path(require(s, "out")) / ("ablate-seed" + std::to_string(run.seed));
  fs::create_directories(outcome.dir);
  metrics::TableRow gt{"GT"};
  for (auto ablation :
       {model::Ablation::kFull, model::Ablation::kNoMemory, model::Ablation::kNoDual, model::Ablation::kNoInter}) {
    Settings model_settings = s;
    model_settings["ablation"] = model::ablation_name(ablation);
    const model::AmiiConfig cfg = detail::model_config(model_settings);
    const std::string name = model::ablation_name(ablation);
    detail::say(log, "ablation variant " + name);
    const train::TrainResult result = train::train(run, cfg, train_recs, val_recs);
    const train::Checkpoint ck{cfg, result.best_params, stats, {{"seed", std::to_string(run.seed)}}};
    const fs::path vdir = outcome.dir / name;
    fs::create_directories(vdir);
    train::save_checkpoint(ck, vdir / "best.ckpt");
    feat::detail::write_text(vdir / "train_log.csv", train::log_csv_text(result.log));

    metrics::TableRow row{name};
    gt = {"GT"};
    for (const auto& rec : test_recs) {
      if (rec.size() < cfg.window + t_out)
        throw TruncationError("test session " + rec.session_id + " has " + std::to_string(rec.size()) +
                              " frames, fewer than " + std::to_string(cfg.window + t_out));
      feat::FaceSeries pred;
      pred.face = infer::rollout_session(ck.params, cfg, stats, rec, feat::Roles::kP1AsAgent, t_out);
      for (std::size_t k = 0; k < t_out; ++k) pred.frames.push_back(static_cast<long long>(cfg.window + k));
      if (ablation == model::Ablation::kNoInter && &rec == &test_recs.front() &&
          rollout_with_scrambled_user(ck, rec, t_out) != pred.face)
        throw ConsistencyError("ablate: noE_inter prediction changed when the user's streams were scrambled");
      const metrics::MetricsReport r = evaluate_prediction(pred, rec, feat::Roles::kP1AsAgent, stats, spec);
      const metrics::TableRow m = metrics::model_row(name, r), g = metrics::gt_row(r);
      const double n = static_cast<double>(test_recs.size());
      for (auto [dst, src] : {std::pair{&row, &m}, {&gt, &g}}) {
        dst->mae += src->mae / n;
        dst->rmse += src->rmse / n;
        dst->ks += src->ks / n;
        dst->tlcc += src->tlcc / n;
        dst->dtw += src->dtw / n;
        dst->sync += src->sync / n;
        dst->el += src->el / n;
      }
    }
    outcome.rows.push_back(row);
  }
  outcome.rows.push_back(gt);
  outcome.table = metrics::table_csv(outcome.rows);
  feat::detail::write_text(outcome.dir / "ablation.csv", outcome.table);
  std::string test_ids;
  for (const auto& r : test_recs) test_ids += (test_ids.empty() ? "" : " ") + r.session_id;
  write_manifest(outcome.dir, "ablate", s, {{"test_sessions", test_ids}});
  detail::say(log, outcome.table);
  return outcome;
}

}  // namespace amii::cli
