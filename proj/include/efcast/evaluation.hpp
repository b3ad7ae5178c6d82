#pragma once

#include "efcast/forecaster.hpp"
#include "efcast/training.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace efcast {

/// DF: one forward pass truncated to H (needs L >= H). EF: rollout to H.
enum class Mode { DF, EF };

std::string_view to_string(Mode mode) noexcept;
Mode mode_from_string(std::string_view name);

struct EvalConfig {
  Mode mode = Mode::EF;
  std::size_t input_length = 0;   // T
  std::size_t output_length = 0;  // L
  std::size_t horizon = 0;        // H
  std::size_t stride = 1;
};

namespace status {
inline constexpr std::string_view ok = "ok";
inline constexpr std::string_view mode_mismatch = "mode_mismatch";
inline constexpr std::string_view horizon_exceeds_data = "horizon_exceeds_data";
inline constexpr std::string_view non_finite_block = "non_finite_block";
inline constexpr std::string_view train_failed = "train_failed";
} // namespace status

struct EvalRecord {
  std::string model;
  std::string dataset;
  std::size_t input_length = 0;
  std::size_t output_length = 0;
  std::size_t horizon = 0;
  Mode mode = Mode::EF;
  double mse = 0.0;  // NaN unless status is ok
  double mae = 0.0;
  std::size_t n_windows = 0;
  std::string status{status::ok};
  /// Sweep training run that produced the model (0 outside sweeps).
  std::size_t run_id = 0;

  bool ok() const noexcept { return status == status::ok; }
};

/// Squared and absolute error sums over windows x H x C.
struct ErrorSums {
  double squared = 0.0;
  double absolute = 0.0;
  std::size_t count = 0;

  double mse() const noexcept { return squared / static_cast<double>(count); }
  double mae() const noexcept { return absolute / static_cast<double>(count); }
};

/// Errors of one mode over explicit samples (x: T x C, y: H x C). Windows are
/// evaluated in chunks; per-chunk sums are added in sample order.
ErrorSums evaluate_samples(const Forecaster& model, std::span<const WindowSample> samples,
                           Mode mode, std::size_t horizon);

/// Scores every (T, H) window of `test_frame` whose target lies outside its
/// context rows. Throws NoTestWindows, ModeMismatch, ShapeMismatch (config
/// disagrees with the model) and NonFiniteBlockError.
EvalRecord evaluate(const Forecaster& model, const SeriesFrame& test_frame, const EvalConfig& cfg,
                    std::string model_id = {}, std::string dataset_id = {});

struct SweepGrid {
  std::vector<std::size_t> input_lengths;   // T values
  std::vector<std::size_t> output_lengths;  // L values
  std::vector<std::size_t> horizons;        // H values
  std::vector<Mode> modes{Mode::DF, Mode::EF};
  std::size_t stride = 1;
};

/// How each (T, L) model is built and trained. T and L of `model` are
/// overwritten per run; the seeds are shared by every run.
struct TrainRecipe {
  ForecasterSpec model;
  TrainConfig train;
};

struct SweepRun {
  std::size_t run_id = 0;  // 1-based, in (T, L) order
  std::size_t input_length = 0;
  std::size_t output_length = 0;
  std::string status{status::ok};
  std::string message;  // failure reason, empty when ok
  TrainHistory history;
};

struct SweepResult {
  std::vector<EvalRecord> records;  // sorted by (T, L, H, mode)
  std::vector<SweepRun> runs;
};

struct SweepOptions {
  SplitSpec split;
  bool standardize = true;
  std::string model_id;
  std::string dataset_id;
  /// Called after each training run with the records gathered so far.
  std::function<void(const SweepResult&)> on_run;
};

/// Splits `dataset` (with context for the largest T), standardizes on the
/// training segment, trains one model per (T, L) and evaluates every
/// (H, mode) cell with it. Cell failures become record statuses.
SweepResult sweep(const TrainRecipe& recipe, const SeriesFrame& dataset, const SweepGrid& grid,
                  const SweepOptions& options = {});

/// Picks records on one side of a comparison. Unset fields match anything.
struct RecordSelector {
  std::optional<Mode> mode;
  std::optional<std::string> model;
  std::optional<std::size_t> input_length;
  std::optional<std::size_t> output_length;
  bool output_equals_horizon = false;  // L == H, the native DF setting

  bool matches(const EvalRecord& r) const;
};

struct WinComparison {
  std::string name;
  RecordSelector left;
  RecordSelector right;
  bool left_wins_ties = true;
  /// Cells are keyed by (model, dataset, H), plus T when set.
  bool match_input_length = true;
};

struct WinCount {
  std::size_t wins = 0;    // strict
  std::size_t ties = 0;
  std::size_t losses = 0;  // strict
  double win_ratio = 0.0;
};

/// Compares MSE and MAE of each matched pair of ok records. A tie counts as a
/// win under `left_wins_ties` and is left out of the ratio otherwise. Throws
/// UnmatchedCell when a selected record has no unique partner.
WinCount compare(std::span<const EvalRecord> records, const WinComparison& comparison);
double win_ratio(std::span<const EvalRecord> records, const WinComparison& comparison);

/// EF scores of one model for increasing horizons. Throws HorizonExceedsData
/// when the largest H has no window; a non-finite rollout marks only its H.
std::vector<EvalRecord> extreme_horizon_eval(const Forecaster& model, const SeriesFrame& test_frame,
                                             std::size_t input_length,
                                             const std::vector<std::size_t>& horizons,
                                             std::size_t stride = 1);

/// model,dataset,T,L,H,mode,mse,mae,n_windows,status
std::string report_to_csv(std::span<const EvalRecord> records);
std::vector<EvalRecord> report_from_csv(const std::string& text);

} // namespace efcast
