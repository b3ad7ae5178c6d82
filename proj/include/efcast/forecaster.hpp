#pragma once

#include "efcast/timeseries.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace efcast {

enum class ModelKind { NaiveSeasonal, LinearDirect, DecompLinear, Mlp };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view name);

struct ForecasterSpec {
  ModelKind kind = ModelKind::LinearDirect;
  std::size_t input_length = 1;   // T
  std::size_t output_length = 1;  // L
  std::size_t channels = 1;       // C
  std::size_t period = 1;         // NaiveSeasonal
  bool per_channel = false;       // LinearDirect, DecompLinear
  std::size_t kernel = 25;        // DecompLinear moving-average width (odd)
  std::size_t hidden = 128;       // Mlp
  std::uint64_t seed = 0;         // parameter initialization

  bool operator==(const ForecasterSpec&) const = default;
};

/// Throws Errc::InvalidSpec when the spec violates its shape constraints.
void validate(const ForecasterSpec& spec);

struct ParamBlock {
  std::string name;
  std::size_t offset;
  std::size_t size;
};

/// Flat parameter (or gradient) vector plus the named blocks it is made of.
struct ParamVector {
  Vector values;
  std::vector<ParamBlock> layout;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

/// Half-open range of output steps [start, end).
struct SegmentSpec {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool operator==(const SegmentSpec&) const = default;
};

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// A fixed-window forecaster mapping a T x C input to an L x C forecast.
///
/// Every kind is channel-independent: the same map (or, with `per_channel`,
/// one map per channel) is applied to each input column. The batched entry
/// points work on "column batches" where column j holds channel j % C of
/// some window.
class Forecaster {
public:
  virtual ~Forecaster() = default;

  const ForecasterSpec& spec() const noexcept { return spec_; }
  std::size_t num_params() const noexcept { return params_.size(); }

  const ParamVector& get_params() const noexcept { return params_; }
  void set_params(const ParamVector& params);
  void set_params(const Vector& values);

  /// T x C -> L x C.
  Matrix predict(const Matrix& x) const;

  /// T x N -> L x N for a column batch, N a multiple of C.
  Matrix forward(const Matrix& columns) const;

  /// MSE over samples x segment steps x channels, and its exact gradient.
  LossGrad loss_and_grad(std::span<const WindowSample> batch, SegmentSpec segment) const;

  /// One forward pass, one (loss, gradient) per segment, on a column batch.
  std::vector<LossGrad> loss_and_grads(const Matrix& x, const Matrix& y,
                                       std::span<const SegmentSpec> segments) const;

  virtual std::unique_ptr<Forecaster> clone() const = 0;

protected:
  Forecaster(ForecasterSpec spec, std::vector<ParamBlock> layout);

  virtual Matrix forward_impl(const Matrix& x) const = 0;
  /// Gradient of sum(d_out .* forward(x)) w.r.t. the parameters. `d_out` is
  /// zero outside the rows of `segment`.
  virtual Vector backward_impl(const Matrix& x, const Matrix& d_out,
                               SegmentSpec segment) const = 0;

  const double* param_data() const noexcept { return params_.values.data(); }
  double* mutable_param_data() noexcept { return params_.values.data(); }

private:
  ForecasterSpec spec_;
  ParamVector params_;
};

std::unique_ptr<Forecaster> build(const ForecasterSpec& spec);

} // namespace efcast
