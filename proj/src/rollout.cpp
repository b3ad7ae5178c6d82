#include "efcast/rollout.hpp"

#include "json.hpp"

namespace efcast {

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
  case Phase::Direct: return "direct";
  case Phase::SemiExtrapolation: return "semi_extrapolation";
  case Phase::PureExtrapolation: return "pure_extrapolation";
  }
  return "unknown";
}

Phase phase_of(std::size_t k, std::size_t input_length, std::size_t output_length) {
  if (k < 1) throw Error(Errc::InvalidSpec, "block index is 1-based");
  if (k == 1) return Phase::Direct;
  return (k - 1) * output_length < input_length ? Phase::SemiExtrapolation
                                                : Phase::PureExtrapolation;
}

Matrix build_block_input(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y_accum,
                         std::size_t k, std::size_t input_length, std::size_t output_length) {
  if (static_cast<std::size_t>(x.rows()) != input_length)
    throw Error(Errc::ShapeMismatch, "observed window must have T rows");
  const std::size_t produced = (k - 1) * output_length;
  if (static_cast<std::size_t>(y_accum.rows()) != produced)
    throw Error(Errc::AccumLengthMismatch, "block " + std::to_string(k) + " expects " +
                                               std::to_string(produced) +
                                               " accumulated rows, got " +
                                               std::to_string(y_accum.rows()));
  if (produced > 0 && y_accum.cols() != x.cols())
    throw Error(Errc::ShapeMismatch, "accumulated predictions differ in column count");

  const auto t = static_cast<Eigen::Index>(input_length);
  const auto p = static_cast<Eigen::Index>(produced);
  switch (phase_of(k, input_length, output_length)) {
  case Phase::Direct:
    return x;
  case Phase::SemiExtrapolation: {
    Matrix in(t, x.cols());
    in.topRows(t - p) = x.bottomRows(t - p);
    in.bottomRows(p) = y_accum;
    return in;
  }
  case Phase::PureExtrapolation:
    return y_accum.middleRows(p - t, t);
  }
  return x;
}

Matrix teacher_forced_input(const Eigen::Ref<const Matrix>& x,
                            const Eigen::Ref<const Matrix>& y_true, std::size_t k,
                            std::size_t input_length, std::size_t output_length) {
  if (k < 1) throw Error(Errc::InvalidSpec, "block index is 1-based");
  const std::size_t needed = (k - 1) * output_length;
  if (static_cast<std::size_t>(y_true.rows()) < needed)
    throw Error(Errc::InsufficientTruth, "block " + std::to_string(k) + " needs " +
                                             std::to_string(needed) + " ground-truth rows");
  return build_block_input(x, y_true.topRows(static_cast<Eigen::Index>(needed)), k, input_length,
                           output_length);
}

namespace {

struct NonFiniteAt {
  std::size_t block;
};

/// Drives the block loop. `step` maps a block input to a block; `observe`
/// sees (k, input, block) before the finiteness check.
template <class Step, class Observe>
Matrix run_blocks(const Matrix& x, const RolloutConfig& cfg, Step&& step, Observe&& observe) {
  if (cfg.horizon < 1) throw Error(Errc::InvalidSpec, "horizon must be >= 1");
  const std::size_t blocks = cfg.num_blocks();
  const auto l = static_cast<Eigen::Index>(cfg.output_length);
  Matrix accum(static_cast<Eigen::Index>(blocks) * l, x.cols());
  for (std::size_t k = 1; k <= blocks; ++k) {
    const auto produced = static_cast<Eigen::Index>(k - 1) * l;
    const Matrix input =
        build_block_input(x, accum.topRows(produced), k, cfg.input_length, cfg.output_length);
    Matrix block = step(input);
    const bool finite = block.allFinite();
    accum.middleRows(produced, l) = block;
    observe(k, input, std::move(block));
    if (!finite) throw NonFiniteAt{k};
  }
  return accum.topRows(static_cast<Eigen::Index>(cfg.horizon));
}

} // namespace

RolloutTrace rollout(const Forecaster& model, const Matrix& x, std::size_t horizon, bool trace) {
  const auto& spec = model.spec();
  if (static_cast<std::size_t>(x.rows()) != spec.input_length ||
      static_cast<std::size_t>(x.cols()) != spec.channels)
    throw Error(Errc::ShapeMismatch, "rollout input does not match the model's T x C");

  RolloutTrace out;
  out.config = {spec.input_length, spec.output_length, horizon};
  const auto observe = [&](std::size_t k, const Matrix& input, Matrix block) {
    out.phases.push_back(phase_of(k, spec.input_length, spec.output_length));
    if (trace) out.inputs.push_back(input);
    out.blocks.push_back(std::move(block));
  };
  try {
    out.y_hat = run_blocks(x, out.config, [&](const Matrix& in) { return model.predict(in); },
                           observe);
  } catch (const NonFiniteAt& bad) {
    const auto rows = static_cast<Eigen::Index>(out.blocks.size() * spec.output_length);
    out.y_hat.resize(rows, x.cols());
    for (std::size_t b = 0; b < out.blocks.size(); ++b)
      out.y_hat.middleRows(static_cast<Eigen::Index>(b * spec.output_length),
                           static_cast<Eigen::Index>(spec.output_length)) = out.blocks[b];
    throw NonFiniteBlockError(bad.block, std::move(out));
  }
  return out;
}

Matrix rollout_columns(const Forecaster& model, const Matrix& x_columns, std::size_t horizon) {
  const auto& spec = model.spec();
  const RolloutConfig cfg{spec.input_length, spec.output_length, horizon};
  try {
    return run_blocks(x_columns, cfg, [&](const Matrix& in) { return model.forward(in); },
                      [](std::size_t, const Matrix&, Matrix&&) {});
  } catch (const NonFiniteAt& bad) {
    throw NonFiniteBlockError(bad.block, RolloutTrace{cfg, {}, {}, {}, {}});
  }
}

namespace {
nlohmann::json rows_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}
} // namespace

std::string trace_to_json(const RolloutTrace& trace) {
  nlohmann::json j;
  j["config"] = {{"T", trace.config.input_length},
                 {"L", trace.config.output_length},
                 {"H", trace.config.horizon},
                 {"K", trace.config.num_blocks()}};
  j["phases"] = nlohmann::json::array();
  for (auto p : trace.phases) j["phases"].push_back(std::string(to_string(p)));
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : trace.blocks) j["blocks"].push_back(rows_to_json(b));
  if (!trace.inputs.empty()) {
    j["inputs"] = nlohmann::json::array();
    for (const auto& in : trace.inputs) j["inputs"].push_back(rows_to_json(in));
  }
  return j.dump(1) + "\n";
}

} // namespace efcast
