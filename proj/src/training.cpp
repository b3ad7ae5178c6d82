#include "efcast/training.hpp"

#include "efcast/error.hpp"
#include "efcast/util.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace efcast {

void validate(const TrainConfig& cfg) {
  if (cfg.max_epochs < 1 || cfg.patience < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0))
    throw Error(Errc::InvalidSpec,
                "training needs max_epochs, patience, batch_size >= 1 and learning_rate > 0");
}

double TrainHistory::best_val_mse() const {
  for (const auto& e : epochs)
    if (e.epoch == best_epoch) return e.val_mse;
  return std::numeric_limits<double>::quiet_NaN();
}

void adam_step(Vector& params, const Vector& grad, AdamState& state, const TrainConfig& cfg) {
  if (state.m.size() == 0 && state.v.size() == 0) {
    state.m = Vector::Zero(params.size());
    state.v = Vector::Zero(params.size());
  }
  if (grad.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw Error(Errc::LengthMismatch, "Adam parameters, gradient and moments differ in length");
  ++state.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  state.m = b1 * state.m + (1.0 - b1) * grad;
  state.v = b2 * state.v + (1.0 - b2) * grad.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  params.array() -=
      cfg.learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.adam_eps);
}

bool EarlyStopping::update(std::size_t epoch, double val_loss) {
  if (val_loss < best_ - 1e-9) {
    best_ = val_loss;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

namespace {

constexpr std::size_t kEvalChunk = 256;

double windows_mse(const Forecaster& model, const WindowSequence& windows) {
  const auto& spec = model.spec();
  std::vector<std::size_t> idx;
  Matrix x, y;
  double sum = 0.0;
  for (std::size_t first = 0; first < windows.size(); first += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, windows.size() - first);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), first);
    gather_columns(windows, idx, x, y);
    sum += (model.forward(x) - y).squaredNorm();
  }
  return sum / (static_cast<double>(windows.size()) * static_cast<double>(spec.output_length) *
                static_cast<double>(spec.channels));
}

} // namespace

double validation_mse(const Forecaster& model, const SeriesFrame& frame) {
  const auto& spec = model.spec();
  const SeriesFrame trimmed = frame.trimmed_for(spec.input_length);
  const auto windows = iter_windows(trimmed, spec.input_length, spec.output_length);
  if (windows.empty()) throw Error(Errc::NoValWindows, "no validation windows");
  return windows_mse(model, windows);
}

TrainHistory train(Forecaster& model, const SeriesFrame& train_frame, const SeriesFrame& val_frame,
                   const TrainConfig& cfg, const TrainHooks& hooks) {
  validate(cfg);
  const auto& spec = model.spec();
  if (train_frame.n_channels() != spec.channels || val_frame.n_channels() != spec.channels)
    throw Error(Errc::ShapeMismatch, "frame channel count does not match the model");
  const SeriesFrame train_trimmed = train_frame.trimmed_for(spec.input_length);
  const SeriesFrame val_trimmed = val_frame.trimmed_for(spec.input_length);
  const auto train_windows = iter_windows(train_trimmed, spec.input_length, spec.output_length);
  const auto val_windows = iter_windows(val_trimmed, spec.input_length, spec.output_length);
  if (train_windows.empty()) throw Error(Errc::NoTrainWindows, "training frame too short");
  if (val_windows.empty()) throw Error(Errc::NoValWindows, "validation frame too short");

  std::vector<SegmentSpec> segments{{0, spec.output_length}};
  segments.insert(segments.end(), hooks.probe_segments.begin(), hooks.probe_segments.end());

  TrainHistory history;
  EarlyStopping stopper(cfg.patience);
  Vector params = model.get_params().values;
  Vector best_params = params;
  AdamState adam;
  Rng rng(cfg.shuffle_seed);
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), 0);
  Matrix x, y;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    double train_mse = 0.0;
    if (model.num_params() == 0) {
      train_mse = windows_mse(model, train_windows);
    } else {
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
      double weighted = 0.0;
      std::size_t batch = 0;
      for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
        const std::size_t n = std::min(cfg.batch_size, order.size() - first);
        gather_columns(train_windows, std::span(order).subspan(first, n), x, y);
        const auto grads = model.loss_and_grads(x, y, segments);
        ++batch;
        if (hooks.on_batch) hooks.on_batch(epoch, batch, grads);
        weighted += grads.front().loss * static_cast<double>(n);
        adam_step(params, grads.front().grad.values, adam, cfg);
        model.set_params(params);
      }
      train_mse = weighted / static_cast<double>(order.size());
    }
    const double val_mse = windows_mse(model, val_windows);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.epochs.push_back({epoch, train_mse, val_mse, seconds});
    if (hooks.on_epoch) hooks.on_epoch(history.epochs.back());
    if (stopper.update(epoch, val_mse)) best_params = params;
    if (model.num_params() == 0) break;
    if (stopper.should_stop()) {
      history.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  history.best_epoch = stopper.best_epoch();
  model.set_params(best_params);
  return history;
}

std::string history_to_csv(const TrainHistory& history) {
  std::string out = "epoch,train_mse,val_mse,seconds\n";
  for (const auto& e : history.epochs)
    out += std::to_string(e.epoch) + "," + format_real(e.train_mse) + "," +
           format_real(e.val_mse) + "," + format_real(e.seconds) + "\n";
  return out;
}

} // namespace efcast
