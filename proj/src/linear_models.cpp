#include "models.hpp"

namespace efcast::detail {

void AffineMaps::append_layout(std::vector<ParamBlock>& layout, const std::string& prefix) const {
  const std::size_t n_maps = per_channel ? channels : 1;
  std::size_t at = offset;
  for (std::size_t m = 0; m < n_maps; ++m) {
    const std::string tag = per_channel ? "[" + std::to_string(m) + "]" : "";
    layout.push_back({prefix + "weight" + tag, at, output_length * input_length});
    at += output_length * input_length;
    layout.push_back({prefix + "bias" + tag, at, output_length});
    at += output_length;
  }
}

void AffineMaps::initialize(double* params, Rng& rng) const {
  const double bound = 1.0 / static_cast<double>(input_length);
  const std::size_t n_maps = per_channel ? channels : 1;
  for (std::size_t m = 0; m < n_maps; ++m) {
    double* w = params + offset + m * map_size();
    for (std::size_t i = 0; i < output_length * input_length; ++i)
      w[i] = uniform(rng, -bound, bound);
    std::fill_n(w + output_length * input_length, output_length, 0.0);
  }
}

void AffineMaps::add_forward(const double* params, const Matrix& x, Matrix& out) const {
  const auto t = static_cast<Eigen::Index>(input_length);
  const auto l = static_cast<Eigen::Index>(output_length);
  if (!per_channel) {
    Eigen::Map<const RowMatrix> w(params + offset, l, t);
    Eigen::Map<const Vector> b(params + offset + l * t, l);
    out.noalias() += w * x;
    out.colwise() += b;
    return;
  }
  const auto c_count = static_cast<Eigen::Index>(channels);
  for (Eigen::Index c = 0; c < c_count; ++c) {
    const double* base = params + offset + static_cast<std::size_t>(c) * map_size();
    Eigen::Map<const RowMatrix> w(base, l, t);
    Eigen::Map<const Vector> b(base + l * t, l);
    auto out_c = channel_cols(out, c, c_count);
    out_c.noalias() += w * channel_cols(x, c, c_count);
    out_c.colwise() += b;
  }
}

void AffineMaps::add_gradient(const Matrix& x, const Matrix& d_out, SegmentSpec segment,
                              double* grad) const {
  const auto t = static_cast<Eigen::Index>(input_length);
  const auto l = static_cast<Eigen::Index>(output_length);
  const auto start = static_cast<Eigen::Index>(segment.start);
  const auto len = static_cast<Eigen::Index>(segment.length());
  const std::size_t n_maps = per_channel ? channels : 1;
  const auto c_count = static_cast<Eigen::Index>(channels);
  for (std::size_t m = 0; m < n_maps; ++m) {
    double* base = grad + offset + m * map_size();
    Eigen::Map<RowMatrix> gw(base, l, t);
    Eigen::Map<Vector> gb(base + l * t, l);
    if (per_channel) {
      const auto c = static_cast<Eigen::Index>(m);
      const auto d = channel_cols(d_out, c, c_count).middleRows(start, len);
      gw.middleRows(start, len).noalias() += d * channel_cols(x, c, c_count).transpose();
      gb.segment(start, len) += d.rowwise().sum();
    } else {
      const auto d = d_out.middleRows(start, len);
      gw.middleRows(start, len).noalias() += d * x.transpose();
      gb.segment(start, len) += d.rowwise().sum();
    }
  }
}

Matrix moving_average(const Matrix& x, std::size_t kernel) {
  const auto t = x.rows();
  const auto half = static_cast<Eigen::Index>(kernel / 2);
  Matrix acc = Matrix::Zero(t, x.cols());
  // Sum of shifted copies; out-of-range rows are replaced by the edge row.
  for (Eigen::Index d = -half; d <= half; ++d) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, -d);         // first row with i+d >= 0
    const Eigen::Index hi = std::min<Eigen::Index>(t, t - d);      // one past last with i+d < t
    if (hi > lo) acc.middleRows(lo, hi - lo) += x.middleRows(lo + d, hi - lo);
    for (Eigen::Index i = 0; i < std::min(lo, t); ++i) acc.row(i) += x.row(0);
    for (Eigen::Index i = std::max<Eigen::Index>(hi, 0); i < t; ++i) acc.row(i) += x.row(t - 1);
  }
  return acc / static_cast<double>(kernel);
}

namespace {

class LinearDirect final : public Forecaster {
public:
  explicit LinearDirect(const ForecasterSpec& spec) : Forecaster(spec, layout_for(spec)) {
    Rng rng(spec.seed);
    maps().initialize(mutable_param_data(), rng);
  }

  std::unique_ptr<Forecaster> clone() const override {
    return std::make_unique<LinearDirect>(*this);
  }

protected:
  Matrix forward_impl(const Matrix& x) const override {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(spec().output_length), x.cols());
    maps().add_forward(param_data(), x, out);
    return out;
  }

  Vector backward_impl(const Matrix& x, const Matrix& d_out, SegmentSpec segment) const override {
    Vector grad = Vector::Zero(static_cast<Eigen::Index>(num_params()));
    maps().add_gradient(x, d_out, segment, grad.data());
    return grad;
  }

private:
  static AffineMaps maps_for(const ForecasterSpec& s) {
    return {0, s.input_length, s.output_length, s.channels, s.per_channel};
  }
  static std::vector<ParamBlock> layout_for(const ForecasterSpec& s) {
    std::vector<ParamBlock> layout;
    maps_for(s).append_layout(layout, "");
    return layout;
  }
  AffineMaps maps() const { return maps_for(spec()); }
};

/// Seasonal-trend decomposition followed by two independent affine maps.
class DecompLinear final : public Forecaster {
public:
  explicit DecompLinear(const ForecasterSpec& spec) : Forecaster(spec, layout_for(spec)) {
    Rng rng(spec.seed);
    seasonal().initialize(mutable_param_data(), rng);
    trend().initialize(mutable_param_data(), rng);
  }

  std::unique_ptr<Forecaster> clone() const override {
    return std::make_unique<DecompLinear>(*this);
  }

protected:
  Matrix forward_impl(const Matrix& x) const override {
    const Matrix tr = moving_average(x, spec().kernel);
    const Matrix se = x - tr;
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(spec().output_length), x.cols());
    seasonal().add_forward(param_data(), se, out);
    trend().add_forward(param_data(), tr, out);
    return out;
  }

  Vector backward_impl(const Matrix& x, const Matrix& d_out, SegmentSpec segment) const override {
    const Matrix tr = moving_average(x, spec().kernel);
    const Matrix se = x - tr;
    Vector grad = Vector::Zero(static_cast<Eigen::Index>(num_params()));
    seasonal().add_gradient(se, d_out, segment, grad.data());
    trend().add_gradient(tr, d_out, segment, grad.data());
    return grad;
  }

private:
  static AffineMaps seasonal_for(const ForecasterSpec& s) {
    return {0, s.input_length, s.output_length, s.channels, s.per_channel};
  }
  static AffineMaps trend_for(const ForecasterSpec& s) {
    return {seasonal_for(s).total_size(), s.input_length, s.output_length, s.channels,
            s.per_channel};
  }
  static std::vector<ParamBlock> layout_for(const ForecasterSpec& s) {
    std::vector<ParamBlock> layout;
    seasonal_for(s).append_layout(layout, "seasonal.");
    trend_for(s).append_layout(layout, "trend.");
    return layout;
  }
  AffineMaps seasonal() const { return seasonal_for(spec()); }
  AffineMaps trend() const { return trend_for(spec()); }
};

} // namespace

std::unique_ptr<Forecaster> make_linear_direct(const ForecasterSpec& spec) {
  return std::make_unique<LinearDirect>(spec);
}

std::unique_ptr<Forecaster> make_decomp_linear(const ForecasterSpec& spec) {
  return std::make_unique<DecompLinear>(spec);
}

} // namespace efcast::detail
