#include "efcast/gradient_analysis.hpp"

#include "efcast/error.hpp"
#include "efcast/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace efcast {

namespace {
constexpr double kNull = std::numeric_limits<double>::quiet_NaN();

double or_null(std::optional<double> v) { return v ? *v : kNull; }
} // namespace

std::vector<std::string> SegmentPartition::labels() const {
  std::vector<std::string> out;
  for (const auto& s : segments) out.push_back(std::to_string(s.start) + ":" + std::to_string(s.end));
  if (include_all) out.emplace_back("all");
  return out;
}

SegmentPartition partition_from_boundaries(const std::vector<std::size_t>& boundaries,
                                           bool include_all) {
  if (boundaries.size() < 2 || boundaries.front() != 0)
    throw Error(Errc::InvalidSpec, "partition boundaries must start at 0 and name an end");
  SegmentPartition p;
  p.output_length = boundaries.back();
  p.include_all = include_all;
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    if (boundaries[i] <= boundaries[i - 1])
      throw Error(Errc::InvalidSpec, "partition boundaries must be strictly increasing");
    p.segments.push_back({boundaries[i - 1], boundaries[i]});
  }
  return p;
}

SegmentPartition default_partition(std::size_t output_length) {
  if (output_length < 1) throw Error(Errc::InvalidSpec, "output length must be >= 1");
  if (output_length == 720) return partition_from_boundaries({0, 96, 192, 336, 720});
  std::vector<std::size_t> bounds{0};
  for (std::size_t q = 1; q <= 4; ++q) {
    const std::size_t b = q * output_length / 4;
    if (b > bounds.back()) bounds.push_back(b);
  }
  return partition_from_boundaries(bounds);
}

std::optional<double> cosine_sim(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "gradients differ in length");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) return std::nullopt;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

std::optional<double> norm_ratio(const Vector& segment_grad, const Vector& full_grad) {
  if (segment_grad.size() != full_grad.size())
    throw Error(Errc::LengthMismatch, "gradients differ in length");
  const double denom = full_grad.norm();
  if (!(denom > 0.0)) return std::nullopt;
  return segment_grad.norm() / denom;
}

GradSnapshot make_snapshot(const SegmentPartition& partition, const Vector& full_grad,
                           const std::vector<Vector>& segment_grads, std::size_t epoch,
                           std::size_t batch) {
  const std::size_t s_count = partition.segments.size();
  if (segment_grads.size() != s_count)
    throw Error(Errc::LengthMismatch, "one gradient per segment expected");

  std::vector<const Vector*> all;
  for (const auto& g : segment_grads) all.push_back(&g);
  if (partition.include_all) all.push_back(&full_grad);

  GradSnapshot snap;
  snap.epoch = epoch;
  snap.batch = batch;
  const auto n = static_cast<Eigen::Index>(all.size());
  snap.sim.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    snap.sim(i, i) = all[i]->norm() > 0.0 ? 1.0 : kNull;
    for (Eigen::Index j = i + 1; j < n; ++j)
      snap.sim(i, j) = snap.sim(j, i) = or_null(cosine_sim(*all[i], *all[j]));
  }

  snap.sim_vs_all.resize(static_cast<Eigen::Index>(s_count));
  snap.norm_ratio.resize(static_cast<Eigen::Index>(s_count));
  Vector weighted = Vector::Zero(full_grad.size());
  const double total = static_cast<double>(partition.output_length);
  for (std::size_t s = 0; s < s_count; ++s) {
    const auto i = static_cast<Eigen::Index>(s);
    snap.sim_vs_all(i) = or_null(cosine_sim(segment_grads[s], full_grad));
    snap.norm_ratio(i) = or_null(norm_ratio(segment_grads[s], full_grad));
    weighted += (static_cast<double>(partition.segments[s].length()) / total) * segment_grads[s];
  }
  snap.decomposition_residual =
      full_grad.size() == 0 ? 0.0 : (weighted - full_grad).cwiseAbs().maxCoeff();
  return snap;
}

namespace {

/// Two-pass population mean and std over the non-NaN values.
std::pair<double, double> mean_std(const std::vector<double>& values, std::size_t& included) {
  double sum = 0.0;
  included = 0;
  for (double v : values)
    if (!std::isnan(v)) {
      sum += v;
      ++included;
    }
  if (included == 0) return {kNull, kNull};
  const double mean = sum / static_cast<double>(included);
  double sq = 0.0;
  for (double v : values)
    if (!std::isnan(v)) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(included))};
}

} // namespace

GradStats aggregate(const SegmentPartition& partition, std::vector<GradSnapshot> snapshots) {
  GradStats st;
  st.partition = partition;
  const std::size_t s_count = partition.segments.size();
  const auto n = static_cast<Eigen::Index>(s_count + (partition.include_all ? 1 : 0));

  st.global_sim = Matrix::Zero(n, n);
  st.n_included.setZero(n, n);
  st.n_excluded.setZero(n, n);
  for (const auto& snap : snapshots) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double v = snap.sim(i, j);
        if (std::isnan(v)) {
          ++st.n_excluded(i, j);
        } else {
          st.global_sim(i, j) += v;
          ++st.n_included(i, j);
        }
      }
    st.max_decomposition_residual =
        std::max(st.max_decomposition_residual, snap.decomposition_residual);
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      st.global_sim(i, j) = st.n_included(i, j) > 0
                                ? st.global_sim(i, j) / static_cast<double>(st.n_included(i, j))
                                : kNull;

  st.norm_ratio_mean.resize(static_cast<Eigen::Index>(s_count));
  st.norm_ratio_std.resize(static_cast<Eigen::Index>(s_count));
  st.norm_ratio_excluded.assign(s_count, 0);
  for (std::size_t s = 0; s < s_count; ++s) {
    std::vector<double> values;
    values.reserve(snapshots.size());
    for (const auto& snap : snapshots) values.push_back(snap.norm_ratio(static_cast<Eigen::Index>(s)));
    std::size_t included = 0;
    const auto [mean, sd] = mean_std(values, included);
    st.norm_ratio_mean(static_cast<Eigen::Index>(s)) = mean;
    st.norm_ratio_std(static_cast<Eigen::Index>(s)) = sd;
    st.norm_ratio_excluded[s] = values.size() - included;
  }

  std::map<std::size_t, std::vector<const GradSnapshot*>> by_epoch;
  for (const auto& snap : snapshots) by_epoch[snap.epoch].push_back(&snap);
  for (const auto& [epoch, snaps] : by_epoch) {
    for (std::size_t s = 0; s < s_count; ++s) {
      const auto i = static_cast<Eigen::Index>(s);
      std::vector<double> sims, ratios;
      for (const auto* snap : snaps) {
        sims.push_back(snap->sim_vs_all(i));
        ratios.push_back(snap->norm_ratio(i));
      }
      std::size_t n_sim = 0, n_ratio = 0;
      const auto [sm, ss] = mean_std(sims, n_sim);
      const auto [rm, rs] = mean_std(ratios, n_ratio);
      st.sim_vs_all.push_back({epoch, s, sm, ss, n_sim});
      st.norm_ratio_by_epoch.push_back({epoch, s, rm, rs, n_ratio});
    }
  }
  st.snapshots = std::move(snapshots);
  return st;
}

GradAnalysis analyze_training(const ForecasterSpec& spec, const SeriesFrame& train_frame,
                              const SeriesFrame& val_frame, const TrainConfig& cfg,
                              const SegmentPartition& partition) {
  if (partition.output_length != spec.output_length)
    throw Error(Errc::InvalidSpec, "partition does not cover the model's output horizon");
  auto model = build(spec);
  if (model->num_params() == 0)
    throw Error(Errc::InvalidSpec, "gradient analysis needs a model with parameters");

  std::vector<GradSnapshot> snapshots;
  TrainHooks hooks;
  hooks.probe_segments = partition.segments;
  hooks.on_batch = [&](std::size_t epoch, std::size_t batch, std::span<const LossGrad> grads) {
    std::vector<Vector> seg;
    seg.reserve(grads.size() - 1);
    for (std::size_t i = 1; i < grads.size(); ++i) seg.push_back(grads[i].grad.values);
    snapshots.push_back(make_snapshot(partition, grads[0].grad.values, seg, epoch, batch));
  };

  GradAnalysis out;
  out.history = train(*model, train_frame, val_frame, cfg, hooks);
  out.final_params = model->get_params().values;
  out.stats = aggregate(partition, std::move(snapshots));
  return out;
}

std::string similarity_csv(const GradStats& stats) {
  const auto labels = stats.partition.labels();
  std::string out = "row_segment,col_segment,mean_cosine,n_included,n_excluded\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      out += labels[i] + "," + labels[j] + "," + format_real(stats.global_sim(a, b)) + "," +
             std::to_string(stats.n_included(a, b)) + "," + std::to_string(stats.n_excluded(a, b)) +
             "\n";
    }
  return out;
}

std::string dynamics_csv(const GradStats& stats) {
  const auto labels = stats.partition.labels();
  std::string out = "epoch,segment,metric,mean,std,n_batches\n";
  const auto emit = [&](const SegmentEpochStat& s, const char* metric) {
    out += std::to_string(s.epoch) + "," + labels[s.segment] + "," + metric + "," +
           format_real(s.mean) + "," + format_real(s.std) + "," + std::to_string(s.n_batches) + "\n";
  };
  for (std::size_t k = 0; k < stats.sim_vs_all.size(); ++k) {
    emit(stats.sim_vs_all[k], "sim_vs_all");
    emit(stats.norm_ratio_by_epoch[k], "norm_ratio");
  }
  return out;
}

} // namespace efcast
