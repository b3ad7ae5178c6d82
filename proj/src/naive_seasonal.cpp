#include "models.hpp"

namespace efcast::detail {
namespace {

/// Repeats the last `period` input steps; output step j copies input step
/// T - period + (j mod period). No parameters.
class NaiveSeasonal final : public Forecaster {
public:
  explicit NaiveSeasonal(const ForecasterSpec& spec) : Forecaster(spec, {}) {}

  std::unique_ptr<Forecaster> clone() const override {
    return std::make_unique<NaiveSeasonal>(*this);
  }

protected:
  Matrix forward_impl(const Matrix& x) const override {
    const auto l = static_cast<Eigen::Index>(spec().output_length);
    const auto p = static_cast<Eigen::Index>(spec().period);
    const auto first = x.rows() - p;
    Matrix out(l, x.cols());
    for (Eigen::Index j = 0; j < l; ++j) out.row(j) = x.row(first + j % p);
    return out;
  }

  Vector backward_impl(const Matrix&, const Matrix&, SegmentSpec) const override {
    return Vector::Zero(0);
  }
};

} // namespace

std::unique_ptr<Forecaster> make_naive_seasonal(const ForecasterSpec& spec) {
  return std::make_unique<NaiveSeasonal>(spec);
}

} // namespace efcast::detail
