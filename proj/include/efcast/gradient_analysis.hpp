#pragma once

#include "efcast/forecaster.hpp"
#include "efcast/training.hpp"

#include <optional>
#include <string>
#include <vector>

namespace efcast {

// Multi-scale gradient analysis of direct (full-horizon) training: the
// output horizon is cut into segments, each segment's MSE gradient is taken
// on every minibatch, and the gradients are compared by direction (cosine
// similarity) and magnitude (norm relative to the full-horizon gradient).

struct SegmentPartition {
  std::size_t output_length = 0;
  std::vector<SegmentSpec> segments;  // sorted, disjoint, covering [0, L)
  bool include_all = true;            // append the full horizon as a pseudo-segment

  /// "a:b" per segment, then "all" when included.
  std::vector<std::string> labels() const;
};

/// [0,96) [96,192) [192,336) [336,720) for L = 720, near-equal quarters
/// otherwise (fewer segments when L < 4).
SegmentPartition default_partition(std::size_t output_length);

/// Boundaries {0, b1, ..., L}, strictly increasing.
SegmentPartition partition_from_boundaries(const std::vector<std::size_t>& boundaries,
                                           bool include_all = true);

/// Clamped to [-1, 1]; nullopt when either gradient has zero norm.
std::optional<double> cosine_sim(const Vector& a, const Vector& b);

/// ||g_s|| / ||g_all||; nullopt when ||g_all|| is zero.
std::optional<double> norm_ratio(const Vector& segment_grad, const Vector& full_grad);

/// One minibatch. Null entries (zero-norm gradients) are stored as NaN.
struct GradSnapshot {
  std::size_t epoch = 0;  // 1-based
  std::size_t batch = 0;  // 1-based within the epoch
  Matrix sim;             // over segments (+ all)
  Vector sim_vs_all;      // cos(g_s, g_all) per segment
  Vector norm_ratio;      // per segment
  /// max_i | sum_s (|s| / L) g_s[i] - g_all[i] |
  double decomposition_residual = 0.0;
};

GradSnapshot make_snapshot(const SegmentPartition& partition, const Vector& full_grad,
                           const std::vector<Vector>& segment_grads, std::size_t epoch,
                           std::size_t batch);

struct SegmentEpochStat {
  std::size_t epoch;
  std::size_t segment;  // index into partition.segments
  double mean;
  double std;           // population
  std::size_t n_batches;  // non-null batches
};

struct GradStats {
  SegmentPartition partition;
  std::vector<GradSnapshot> snapshots;

  Matrix global_sim;  // mean over non-null entries
  Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic> n_included;
  Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic> n_excluded;

  Vector norm_ratio_mean;  // global, per segment
  Vector norm_ratio_std;
  std::vector<std::size_t> norm_ratio_excluded;

  std::vector<SegmentEpochStat> sim_vs_all;  // per epoch and segment
  std::vector<SegmentEpochStat> norm_ratio_by_epoch;

  double max_decomposition_residual = 0.0;
};

GradStats aggregate(const SegmentPartition& partition, std::vector<GradSnapshot> snapshots);

struct GradAnalysis {
  GradStats stats;
  TrainHistory history;
  Vector final_params;
};

/// Standard training, observed. Segment gradients are taken before each
/// update, and the update itself uses the full-horizon gradient, so the
/// trajectory is identical to train() with the same seeds.
GradAnalysis analyze_training(const ForecasterSpec& spec, const SeriesFrame& train_frame,
                              const SeriesFrame& val_frame, const TrainConfig& cfg,
                              const SegmentPartition& partition);

/// row_segment,col_segment,mean_cosine,n_included,n_excluded
std::string similarity_csv(const GradStats& stats);
/// epoch,segment,metric,mean,std,n_batches  (metric is sim_vs_all or norm_ratio)
std::string dynamics_csv(const GradStats& stats);

} // namespace efcast
