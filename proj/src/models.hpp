#pragma once

// Concrete forecaster kinds; only build() in forecaster.cpp constructs them.

#include "efcast/forecaster.hpp"
#include "efcast/util.hpp"

#include <memory>

namespace efcast::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StridedCols = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;
using MutableStridedCols = Eigen::Map<Matrix, 0, Eigen::OuterStride<>>;

/// Columns c, c + C, c + 2C, ... of a column batch.
inline StridedCols channel_cols(const Matrix& m, Eigen::Index c, Eigen::Index channels) {
  return StridedCols(m.data() + c * m.rows(), m.rows(), m.cols() / channels,
                     Eigen::OuterStride<>(channels * m.rows()));
}
inline MutableStridedCols channel_cols(Matrix& m, Eigen::Index c, Eigen::Index channels) {
  return MutableStridedCols(m.data() + c * m.rows(), m.rows(), m.cols() / channels,
                            Eigen::OuterStride<>(channels * m.rows()));
}

/// One affine map y = W x + b (W is L x T, row-major) or, per channel, C of
/// them laid out back to back starting at `offset`.
struct AffineMaps {
  std::size_t offset;
  std::size_t input_length;
  std::size_t output_length;
  std::size_t channels;
  bool per_channel;

  std::size_t map_size() const noexcept { return output_length * input_length + output_length; }
  std::size_t total_size() const noexcept { return (per_channel ? channels : 1) * map_size(); }

  void append_layout(std::vector<ParamBlock>& layout, const std::string& prefix) const;
  /// Weights uniform in [-1/T, 1/T], biases zero.
  void initialize(double* params, Rng& rng) const;
  void add_forward(const double* params, const Matrix& x, Matrix& out) const;
  void add_gradient(const Matrix& x, const Matrix& d_out, SegmentSpec segment,
                    double* grad) const;
};

/// Centered moving average with edge replication; output has the input's shape.
Matrix moving_average(const Matrix& x, std::size_t kernel);

std::unique_ptr<Forecaster> make_naive_seasonal(const ForecasterSpec& spec);
std::unique_ptr<Forecaster> make_linear_direct(const ForecasterSpec& spec);
std::unique_ptr<Forecaster> make_decomp_linear(const ForecasterSpec& spec);
std::unique_ptr<Forecaster> make_mlp(const ForecasterSpec& spec);

} // namespace efcast::detail
