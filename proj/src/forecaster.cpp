#include "efcast/forecaster.hpp"

#include "efcast/error.hpp"
#include "models.hpp"

namespace efcast {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
  case ModelKind::NaiveSeasonal: return "NaiveSeasonal";
  case ModelKind::LinearDirect: return "LinearDirect";
  case ModelKind::DecompLinear: return "DecompLinear";
  case ModelKind::Mlp: return "Mlp";
  }
  return "Unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
  for (auto kind : {ModelKind::NaiveSeasonal, ModelKind::LinearDirect, ModelKind::DecompLinear,
                    ModelKind::Mlp})
    if (name == to_string(kind)) return kind;
  throw Error(Errc::InvalidSpec, "unknown model kind '" + std::string(name) + "'");
}

void validate(const ForecasterSpec& spec) {
  const auto fail = [](const std::string& msg) { throw Error(Errc::InvalidSpec, msg); };
  if (spec.input_length < 1 || spec.output_length < 1 || spec.channels < 1)
    fail("input length, output length and channel count must be >= 1");
  switch (spec.kind) {
  case ModelKind::NaiveSeasonal:
    if (spec.period < 1 || spec.period > spec.input_length)
      fail("period must lie in [1, input length]");
    break;
  case ModelKind::DecompLinear:
    if (spec.kernel % 2 == 0 || spec.kernel > spec.input_length)
      fail("moving-average kernel must be odd and <= input length");
    break;
  case ModelKind::Mlp:
    if (spec.hidden < 1) fail("hidden width must be >= 1");
    break;
  case ModelKind::LinearDirect:
    break;
  }
}

Forecaster::Forecaster(ForecasterSpec spec, std::vector<ParamBlock> layout)
    : spec_(std::move(spec)) {
  std::size_t total = 0;
  for (const auto& block : layout) total += block.size;
  params_.values = Vector::Zero(static_cast<Eigen::Index>(total));
  params_.layout = std::move(layout);
}

void Forecaster::set_params(const ParamVector& params) { set_params(params.values); }

void Forecaster::set_params(const Vector& values) {
  if (static_cast<std::size_t>(values.size()) != num_params())
    throw Error(Errc::LengthMismatch, "expected " + std::to_string(num_params()) +
                                          " parameters, got " + std::to_string(values.size()));
  params_.values = values;
}

Matrix Forecaster::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != spec_.input_length ||
      static_cast<std::size_t>(x.cols()) != spec_.channels)
    throw Error(Errc::ShapeMismatch, "expected a " + std::to_string(spec_.input_length) + "x" +
                                         std::to_string(spec_.channels) + " input, got " +
                                         std::to_string(x.rows()) + "x" +
                                         std::to_string(x.cols()));
  return forward_impl(x);
}

Matrix Forecaster::forward(const Matrix& columns) const {
  if (static_cast<std::size_t>(columns.rows()) != spec_.input_length ||
      columns.cols() % static_cast<Eigen::Index>(spec_.channels) != 0)
    throw Error(Errc::ShapeMismatch, "column batch does not match the model's input shape");
  return forward_impl(columns);
}

LossGrad Forecaster::loss_and_grad(std::span<const WindowSample> batch,
                                   SegmentSpec segment) const {
  if (batch.empty()) throw Error(Errc::EmptyBatch, "loss over an empty batch");
  for (const auto& s : batch)
    if (static_cast<std::size_t>(s.x.rows()) != spec_.input_length ||
        static_cast<std::size_t>(s.y.rows()) != spec_.output_length ||
        static_cast<std::size_t>(s.x.cols()) != spec_.channels ||
        static_cast<std::size_t>(s.y.cols()) != spec_.channels)
      throw Error(Errc::ShapeMismatch, "sample shape does not match the model");
  Matrix x, y;
  gather_columns(batch, x, y);
  const SegmentSpec segments[] = {segment};
  return std::move(loss_and_grads(x, y, segments).front());
}

std::vector<LossGrad> Forecaster::loss_and_grads(const Matrix& x, const Matrix& y,
                                                 std::span<const SegmentSpec> segments) const {
  if (x.cols() == 0) throw Error(Errc::EmptyBatch, "loss over an empty batch");
  if (static_cast<std::size_t>(y.rows()) != spec_.output_length || y.cols() != x.cols())
    throw Error(Errc::ShapeMismatch, "target batch does not match the model's output shape");
  for (const auto& s : segments)
    if (s.start >= s.end || s.end > spec_.output_length)
      throw Error(Errc::EmptySegment, "segment [" + std::to_string(s.start) + ", " +
                                          std::to_string(s.end) + ") is empty or out of range");

  const Matrix pred = forward(x);
  const Matrix err = pred - y;
  std::vector<LossGrad> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    const auto start = static_cast<Eigen::Index>(s.start);
    const auto len = static_cast<Eigen::Index>(s.length());
    const double count = static_cast<double>(len) * static_cast<double>(x.cols());
    LossGrad lg;
    lg.loss = err.middleRows(start, len).squaredNorm() / count;
    lg.grad.layout = params_.layout;
    if (num_params() == 0) {
      lg.grad.values = Vector::Zero(0);
    } else {
      Matrix d_out = Matrix::Zero(err.rows(), err.cols());
      d_out.middleRows(start, len) = err.middleRows(start, len) * (2.0 / count);
      lg.grad.values = backward_impl(x, d_out, s);
    }
    out.push_back(std::move(lg));
  }
  return out;
}

std::unique_ptr<Forecaster> build(const ForecasterSpec& spec) {
  validate(spec);
  switch (spec.kind) {
  case ModelKind::NaiveSeasonal: return detail::make_naive_seasonal(spec);
  case ModelKind::LinearDirect: return detail::make_linear_direct(spec);
  case ModelKind::DecompLinear: return detail::make_decomp_linear(spec);
  case ModelKind::Mlp: return detail::make_mlp(spec);
  }
  throw Error(Errc::InvalidSpec, "unknown model kind");
}

} // namespace efcast
