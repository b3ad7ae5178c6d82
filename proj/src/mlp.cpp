#include "models.hpp"

#include <cmath>

namespace efcast::detail {
namespace {

// Parameter layout: hidden.weight (H x T), hidden.bias (H), output.weight (L x H), output.bias (L).
class Mlp final : public Forecaster {
public:
  explicit Mlp(const ForecasterSpec& spec) : Forecaster(spec, layout_for(spec)) {
    Rng rng(spec.seed);
    double* p = mutable_param_data();
    const double b1 = 1.0 / std::sqrt(static_cast<double>(spec.input_length));
    const double b2 = 1.0 / std::sqrt(static_cast<double>(spec.hidden));
    const std::size_t n1 = spec.hidden * spec.input_length + spec.hidden;
    for (std::size_t i = 0; i < n1; ++i) p[i] = uniform(rng, -b1, b1);
    for (std::size_t i = n1; i < num_params(); ++i) p[i] = uniform(rng, -b2, b2);
  }

  std::unique_ptr<Forecaster> clone() const override { return std::make_unique<Mlp>(*this); }

protected:
  Matrix forward_impl(const Matrix& x) const override {
    const Matrix act = pre_activation(x).cwiseMax(0.0);
    Matrix out = w2() * act;
    out.colwise() += b2();
    return out;
  }

  // Reverse pass through output layer, ReLU, hidden layer.
  Vector backward_impl(const Matrix& x, const Matrix& d_out, SegmentSpec) const override {
    const Matrix z = pre_activation(x);
    const Matrix act = z.cwiseMax(0.0);

    Vector grad(static_cast<Eigen::Index>(num_params()));
    Eigen::Map<RowMatrix> g_w1(grad.data(), hidden(), input());
    Eigen::Map<Vector> g_b1(grad.data() + hidden() * input(), hidden());
    Eigen::Map<RowMatrix> g_w2(grad.data() + hidden() * input() + hidden(), output(), hidden());
    Eigen::Map<Vector> g_b2(grad.data() + hidden() * input() + hidden() + output() * hidden(),
                            output());

    g_w2.noalias() = d_out * act.transpose();
    g_b2 = d_out.rowwise().sum();
    const Matrix d_z = (w2().transpose() * d_out).cwiseProduct((z.array() > 0.0).cast<double>().matrix());
    g_w1.noalias() = d_z * x.transpose();
    g_b1 = d_z.rowwise().sum();
    return grad;
  }

private:
  static std::vector<ParamBlock> layout_for(const ForecasterSpec& s) {
    const std::size_t h = s.hidden, t = s.input_length, l = s.output_length;
    return {{"hidden.weight", 0, h * t},
            {"hidden.bias", h * t, h},
            {"output.weight", h * t + h, l * h},
            {"output.bias", h * t + h + l * h, l}};
  }

  Eigen::Index input() const { return static_cast<Eigen::Index>(spec().input_length); }
  Eigen::Index hidden() const { return static_cast<Eigen::Index>(spec().hidden); }
  Eigen::Index output() const { return static_cast<Eigen::Index>(spec().output_length); }

  Eigen::Map<const RowMatrix> w1() const { return {param_data(), hidden(), input()}; }
  Eigen::Map<const Vector> b1() const { return {param_data() + hidden() * input(), hidden()}; }
  Eigen::Map<const RowMatrix> w2() const {
    return {param_data() + hidden() * input() + hidden(), output(), hidden()};
  }
  Eigen::Map<const Vector> b2() const {
    return {param_data() + hidden() * input() + hidden() + output() * hidden(), output()};
  }

  Matrix pre_activation(const Matrix& x) const {
    Matrix z = w1() * x;
    z.colwise() += b1();
    return z;
  }
};

} // namespace

std::unique_ptr<Forecaster> make_mlp(const ForecasterSpec& spec) {
  return std::make_unique<Mlp>(spec);
}

} // namespace efcast::detail
