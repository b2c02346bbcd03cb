// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "amii/diff/param.hpp"
#include "amii/diff/tape.hpp"
#include "amii/error.hpp"
#include "amii/feat/csv.hpp"
#include "amii/feat/windows.hpp"
#include "amii/model/amii.hpp"
#include "amii/train/adam.hpp"
#include "amii/train/schedule.hpp"

namespace amii::train {

struct TrainRunConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::size_t window_stride = 1;  // use every n-th window position
  double base_lr = 1e-7;
  double max_lr = 1e-3;
  double step_factor = 10.0;  // CLR half cycle, in epochs
  bool clip_gradients = false;
  double clip_norm = 1.0;
  std::size_t threads = 1;

  void validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (window_stride < 1) throw ConfigError("train: window_stride must be >= 1");
    if (threads < 1) throw ConfigError("train: threads must be >= 1");
    if (!(step_factor > 0)) throw ConfigError("train: step_factor must be positive");
    ClrSchedule{base_lr, max_lr, 1}.validate();
  }
};

struct LogRow {
  std::size_t epoch = 0;
  std::uint64_t iter = 0;  // iterations completed
  double lr = 0;           // learning rate of the last update
  double train_loss = 0;   // mean per-sample loss over the epoch's updates
  double val_loss = 0;     // NaN when there is no validation data
};

struct TrainResult {
  diff::ParamSet best_params;  // lowest validation loss (train loss without validation data)
  diff::ParamSet final_params;
  std::vector<LogRow> log;
  std::size_t best_epoch = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::uint64_t iterations = 0;
};

/// Mean per-sample loss; parameters are only read.
inline double mean_loss(const diff::ParamSet& params, const model::AmiiConfig& cfg,
                        std::span<const feat::DyadRecording> recs, std::span<const feat::WindowRef> refs) {
  if (refs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0;
  for (const auto& ref : refs) total += model::evaluate_loss(params, feat::materialize(recs, ref, cfg.window), cfg);
  return total / static_cast<double>(refs.size());
}

/// Accumulates the gradient of the batch-mean loss into params' grads and
/// returns the batch-mean loss. Per-sample gradients are summed in sample
/// order, so the result does not depend on `threads`.
inline double accumulate_batch_gradient(diff::ParamSet& params, const model::AmiiConfig& cfg,
                                        std::span<const feat::DyadRecording> recs,
                                        std::span<const feat::WindowRef> batch, std::size_t threads = 1) {
  const double inv = 1.0 / static_cast<double>(batch.size());
  std::vector<double> losses(batch.size());
  if (threads <= 1 || batch.size() <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      diff::Tape tape(&params);
      diff::Var loss = model::sample_loss(tape, feat::materialize(recs, batch[i], cfg.window), cfg);
      losses[i] = loss.value().item();
      tape.backward(diff::scale(loss, inv));
    }
  } else {
    std::vector<std::vector<diff::Tensor>> grads(batch.size());
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < batch.size(); i += threads) {
            grads[i] = params.make_grad_buffers();
            diff::Tape tape(&params);
            diff::Var loss = model::sample_loss(tape, feat::materialize(recs, batch[i], cfg.window), cfg);
            losses[i] = loss.value().item();
            tape.backward(diff::scale(loss, inv), grads[i]);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (std::size_t i = 0; i < batch.size(); ++i)
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto dst = params[p].grad.data();
        auto src = grads[i][p].data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
  }
  double total = 0;
  for (double l : losses) total += l;
  return total * inv;
}

using EpochCallback = std::function<void(const LogRow&)>;

/// Minibatch Adam on the combined two-person MSE with a triangular cyclical
/// learning rate. Inputs must already be standardized.
inline TrainResult train(const TrainRunConfig& run, const model::AmiiConfig& cfg,
                         std::span<const feat::DyadRecording> train_recs, std::span<const feat::DyadRecording> val_recs,
                         const EpochCallback& on_epoch = {}) {
  run.validate();
  cfg.validate();
  std::vector<feat::WindowRef> refs = feat::enumerate_windows(train_recs, cfg.window, run.window_stride);
  if (refs.empty()) throw DataError("train: the training split yields no windows");
  const std::vector<feat::WindowRef> val_refs = feat::enumerate_windows(val_recs, cfg.window, run.window_stride);

  const std::uint64_t iters_per_epoch = (refs.size() + run.batch_size - 1) / run.batch_size;
  const ClrSchedule sched{run.base_lr, run.max_lr, clr_step_size(iters_per_epoch, run.step_factor)};

  TrainResult result;
  diff::ParamSet params = model::init_params(cfg, run.seed);
  OptimizerState opt = OptimizerState::for_params(params);
  std::mt19937_64 rng(run.seed ^ 0x9E3779B97F4A7C15ULL);
  result.best_params = params;

  std::uint64_t iter = 0;
  for (std::size_t epoch = 1; epoch <= run.epochs; ++epoch) {
    std::shuffle(refs.begin(), refs.end(), rng);
    double epoch_total = 0;
    double lr = 0;
    for (std::size_t start = 0; start < refs.size(); start += run.batch_size) {
      const std::size_t count = std::min(run.batch_size, refs.size() - start);
      const std::span<const feat::WindowRef> batch(refs.data() + start, count);
      params.zero_grads();
      const double loss = accumulate_batch_gradient(params, cfg, train_recs, batch, run.threads);
      if (!std::isfinite(loss)) throw NumericError("train: non-finite loss at iteration " + std::to_string(iter));
      if (run.clip_gradients) clip_grad_norm(params, run.clip_norm);
      lr = clr_lr(iter, sched);
      adam_step(params, opt, lr);
      ++iter;
      epoch_total += loss * static_cast<double>(count);
    }
    LogRow row;
    row.epoch = epoch;
    row.iter = iter;
    row.lr = lr;
    row.train_loss = epoch_total / static_cast<double>(refs.size());
    row.val_loss = mean_loss(params, cfg, val_recs, val_refs);
    const double select = val_refs.empty() ? row.train_loss : row.val_loss;
    if (select < result.best_loss) {
      result.best_loss = select;
      result.best_epoch = epoch;
      result.best_params = params;
    }
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  result.iterations = iter;
  result.final_params = std::move(params);
  return result;
}

inline std::string log_csv_text(std::span<const LogRow> rows) {
  std::ostringstream os;
  os << "epoch,iter,lr,train_loss,val_loss\n";
  for (const auto& r : rows)
    os << r.epoch << ',' << r.iter << ',' << feat::format_double(r.lr) << ',' << feat::format_double(r.train_loss)
       << ',' << feat::format_double(r.val_loss) << '\n';
  return os.str();
}

/// Reads a training log back; used for the loss plot.
inline std::vector<LogRow> load_log_csv(const std::filesystem::path& path) {
  const auto table = feat::detail::read_csv(path);
  const auto col = [&](const char* name) { return feat::detail::column_index(table, name, path); };
  const std::size_t ce = col("epoch"), ci = col("iter"), cl = col("lr"), ct = col("train_loss"), cv = col("val_loss");
  std::vector<LogRow> rows;
  for (const auto& r : table.rows)
    rows.push_back({static_cast<std::size_t>(r[ce]), static_cast<std::uint64_t>(r[ci]), r[cl], r[ct], r[cv]});
  return rows;
}

}  // namespace amii::train
