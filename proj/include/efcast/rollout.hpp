#pragma once

#include "efcast/error.hpp"
#include "efcast/forecaster.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace efcast {

// Block-wise recursive forecasting: a fixed (T -> L) forecaster is applied
// K = ceil(H / L) times. Block k reads the last T rows of the virtual
// sequence [x ; blocks 1..k-1], and the concatenated blocks are truncated
// to H rows.

enum class Phase {
  Direct,             // k = 1: the observed window
  SemiExtrapolation,  // 0 < (k-1)L < T: observed tail followed by predictions
  PureExtrapolation,  // (k-1)L >= T: predictions only
};

std::string_view to_string(Phase phase) noexcept;

struct RolloutConfig {
  std::size_t input_length;   // T
  std::size_t output_length;  // L
  std::size_t horizon;        // H

  std::size_t num_blocks() const noexcept {
    return (horizon + output_length - 1) / output_length;
  }
};

/// Phase of 1-based block `k`. The boundary (k-1)L == T is pure extrapolation.
Phase phase_of(std::size_t k, std::size_t input_length, std::size_t output_length);

/// Input of block k given the observed window `x` (T rows) and the
/// predictions so far `y_accum` ((k-1)L rows). Works for any column count.
Matrix build_block_input(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y_accum,
                         std::size_t k, std::size_t input_length, std::size_t output_length);

/// Same construction with ground truth in place of predictions.
Matrix teacher_forced_input(const Eigen::Ref<const Matrix>& x,
                            const Eigen::Ref<const Matrix>& y_true, std::size_t k,
                            std::size_t input_length, std::size_t output_length);

struct RolloutTrace {
  RolloutConfig config{};
  std::vector<Matrix> blocks;  // L x C each
  std::vector<Phase> phases;
  std::vector<Matrix> inputs;  // T x C each, only when tracing
  Matrix y_hat;                // H x C (fewer rows in a partial trace)
};

class NonFiniteBlockError : public Error {
public:
  NonFiniteBlockError(std::size_t block, RolloutTrace partial)
      : Error(Errc::NonFiniteBlock, "block " + std::to_string(block) + " contains NaN or Inf"),
        block_(block), partial_(std::move(partial)) {}

  std::size_t block() const noexcept { return block_; }
  const RolloutTrace& partial_trace() const noexcept { return partial_; }

private:
  std::size_t block_;
  RolloutTrace partial_;
};

RolloutTrace rollout(const Forecaster& model, const Matrix& x, std::size_t horizon,
                     bool trace = false);

/// Batched rollout over a column batch (T x N, column j is channel j % C).
/// Returns H x N. Throws NonFiniteBlockError (with an empty trace).
Matrix rollout_columns(const Forecaster& model, const Matrix& x_columns, std::size_t horizon);

/// {"config": {T, L, H, K}, "phases": [...], "blocks": [[[c0, c1, ...], ...], ...]}
/// plus "inputs" in the same layout when the trace retained them.
std::string trace_to_json(const RolloutTrace& trace);

} // namespace efcast
