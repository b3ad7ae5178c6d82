#pragma once

#include "efcast/forecaster.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace efcast {

struct TrainConfig {
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t shuffle_seed = 0;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch;  // 1-based
  double train_mse;
  double val_mse;
  double seconds;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  double best_val_mse() const;
};

struct AdamState {
  Vector m;
  Vector v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(Vector& params, const Vector& grad, AdamState& state, const TrainConfig& cfg);

/// Tracks the best validation loss; an epoch counts as an improvement only
/// when it beats the best by more than 1e-9.
class EarlyStopping {
public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when `val_loss` is a new best.
  bool update(std::size_t epoch, double val_loss);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best() const noexcept { return best_; }

private:
  std::size_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
};

struct TrainHooks {
  /// Extra output segments evaluated on every minibatch alongside the full
  /// horizon, before the parameter update.
  std::vector<SegmentSpec> probe_segments;
  /// grads[0] is the full-horizon (loss, gradient) used for the update;
  /// grads[1..] follow `probe_segments`. Epoch and batch are 1-based.
  std::function<void(std::size_t epoch, std::size_t batch, std::span<const LossGrad> grads)>
      on_batch;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Adam on full-horizon MSE with early stopping on validation MSE. On return
/// `model` holds the parameters of the best epoch.
TrainHistory train(Forecaster& model, const SeriesFrame& train_frame, const SeriesFrame& val_frame,
                   const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Exact mean squared error over every stride-1 (T, L) window of `frame`
/// whose target lies outside the frame's context rows.
double validation_mse(const Forecaster& model, const SeriesFrame& frame);

/// epoch,train_mse,val_mse,seconds
std::string history_to_csv(const TrainHistory& history);

} // namespace efcast
