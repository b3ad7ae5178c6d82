#include "doctest.h"

#include "efcast/error.hpp"
#include "efcast/evaluation.hpp"
#include "efcast/rollout.hpp"

#include "../support/support.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

using namespace efcast;
using namespace efcast::testing;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an efcast::Error");
  return Errc::Io;
}

/// Returns zeros, or NaN for every call from `poison_from` on.
class Constant : public Forecaster {
public:
  Constant(std::size_t t, std::size_t l, double value, int poison_from = 0, std::size_t c = 1)
      : Forecaster(spec_of(ModelKind::NaiveSeasonal, t, l, c), {}), value_(value),
        poison_from_(poison_from) {}
  std::unique_ptr<Forecaster> clone() const override { return nullptr; }

protected:
  Matrix forward_impl(const Matrix& x) const override {
    ++calls_;
    const double v = poison_from_ > 0 && calls_ >= poison_from_
                         ? std::numeric_limits<double>::quiet_NaN()
                         : value_;
    return Matrix::Constant(static_cast<Eigen::Index>(spec().output_length), x.cols(), v);
  }
  Vector backward_impl(const Matrix&, const Matrix&, SegmentSpec) const override { return {}; }

private:
  double value_;
  int poison_from_;
  mutable int calls_ = 0;
};

std::unique_ptr<Forecaster> naive(std::size_t t, std::size_t l, std::size_t period) {
  auto s = spec_of(ModelKind::NaiveSeasonal, t, l);
  s.period = period;
  return build(s);
}

/// Frame repeating `pattern` for n rows.
SeriesFrame periodic(std::size_t n, const std::vector<double>& pattern) {
  Matrix v(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i), 0) = pattern[i % pattern.size()];
  return frame_of(std::move(v));
}

EvalRecord rec(Mode mode, std::size_t t, std::size_t l, std::size_t h, double mse, double mae,
               std::string model = "m") {
  EvalRecord r;
  r.model = std::move(model);
  r.dataset = "d";
  r.input_length = t;
  r.output_length = l;
  r.horizon = h;
  r.mode = mode;
  r.mse = mse;
  r.mae = mae;
  r.n_windows = 1;
  return r;
}

WinComparison ef_vs_df(std::size_t l) {
  WinComparison c;
  c.name = "ef";
  c.left.mode = Mode::EF;
  c.left.output_length = l;
  c.right.mode = Mode::DF;
  c.right.output_equals_horizon = true;
  return c;
}

} // namespace

TEST_CASE("mode names") {
  CHECK(to_string(Mode::DF) == "DF");
  CHECK(mode_from_string("ef") == Mode::EF);
  CHECK(code_of([] { mode_from_string("XF"); }) == Errc::Config);
}

TEST_CASE("evaluate: perfect predictor scores zero") {
  const auto f = periodic(60, {1, 2, 3, 4});
  const auto m = naive(8, 4, 4);
  for (Mode mode : {Mode::DF, Mode::EF}) {
    const auto r = evaluate(*m, f, {mode, 8, 4, 4, 1}, "naive", "p4");
    CHECK(r.mse == 0.0);
    CHECK(r.mae == 0.0);
    CHECK(r.n_windows == 60 - 12 + 1);
    CHECK(r.ok());
  }
  CHECK(evaluate(*m, f, {Mode::EF, 8, 4, 17, 1}).mse == 0.0);
}

TEST_CASE("evaluate: zero predictor against a direct average") {
  Rng rng(2);
  const auto f = frame_of(rand_matrix(rng, 50, 3));
  const Constant zero(5, 3, 0.0, 0, 3);
  for (std::size_t h : {1, 3, 7}) {
    const auto r = evaluate(zero, f, {Mode::EF, 5, 3, h, 2});
    double sq = 0, ab = 0;
    std::size_t count = 0, windows = 0;
    for (std::size_t o = 0; o + 5 + h <= 50; o += 2, ++windows)
      for (std::size_t i = o + 5; i < o + 5 + h; ++i)
        for (Eigen::Index c = 0; c < 3; ++c, ++count) {
          const double v = f.values()(static_cast<Eigen::Index>(i), c);
          sq += v * v;
          ab += std::abs(v);
        }
    CHECK(r.n_windows == windows);
    CHECK(r.mse == doctest::Approx(sq / static_cast<double>(count)).epsilon(1e-12));
    CHECK(r.mae == doctest::Approx(ab / static_cast<double>(count)).epsilon(1e-12));
  }
}

TEST_CASE("property: EF at H = L is bitwise DF") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t t = rand_int(rng, 1, 12), l = rand_int(rng, 1, 12), c = rand_int(rng, 1, 3);
    const ModelKind kinds[] = {ModelKind::LinearDirect, ModelKind::DecompLinear, ModelKind::Mlp};
    const auto m = build(spec_of(kinds[trial % 3], t, l, c, trial));
    const auto f = frame_of(rand_matrix(rng, t + l + rand_int(rng, 0, 300), c));
    const auto df = evaluate(*m, f, {Mode::DF, t, l, l, 1});
    const auto ef = evaluate(*m, f, {Mode::EF, t, l, l, 1});
    CHECK(std::memcmp(&df.mse, &ef.mse, sizeof(double)) == 0);
    CHECK(std::memcmp(&df.mae, &ef.mae, sizeof(double)) == 0);
  }
}

TEST_CASE("evaluate: errors") {
  const auto m = naive(4, 2, 2);
  const auto f = periodic(20, {1, 2});
  CHECK(code_of([&] { evaluate(*m, f, {Mode::DF, 4, 2, 3, 1}); }) == Errc::ModeMismatch);
  CHECK(code_of([&] { evaluate(*m, f, {Mode::EF, 4, 2, 17, 1}); }) == Errc::NoTestWindows);
  CHECK(code_of([&] { evaluate(*m, f, {Mode::EF, 5, 2, 2, 1}); }) == Errc::ShapeMismatch);
  CHECK(code_of([&] { evaluate(*m, f, {Mode::EF, 4, 2, 0, 1}); }) == Errc::InvalidSpec);
  Constant nan(4, 2, 0.0, 1);
  CHECK(code_of([&] { evaluate(nan, f, {Mode::DF, 4, 2, 2, 1}); }) == Errc::NonFiniteBlock);
}

TEST_CASE("evaluate: context rows are never targets") {
  const auto full = periodic(40, {1, 2, 3, 4, 5});
  const auto m = naive(6, 2, 5);
  const auto with_ctx = full.slice(10, 40, 10);
  const auto r = evaluate(*m, with_ctx, {Mode::EF, 6, 2, 4, 1});
  // 4 of the 10 context rows are dropped
  CHECK(r.n_windows == window_count(26, 6, 4));
}

TEST_CASE("property: error sums are invariant to window order") {
  Rng rng(13);
  const auto m = build(spec_of(ModelKind::Mlp, 6, 3, 2));
  const auto f = frame_of(rand_matrix(rng, 700, 2));
  std::vector<WindowSample> samples;
  for (const auto& w : iter_windows(f, 6, 5)) samples.push_back(w);
  for (Mode mode : {Mode::EF}) {
    const auto base = evaluate_samples(*m, samples, mode, 5);
    for (int trial = 0; trial < 5; ++trial) {
      auto shuffled = samples;
      for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[uniform_index(rng, i)]);
      const auto s = evaluate_samples(*m, shuffled, mode, 5);
      CHECK(std::abs(s.mse() - base.mse()) <= 1e-12 * std::max(1.0, base.mse()));
      CHECK(std::abs(s.mae() - base.mae()) <= 1e-12 * std::max(1.0, base.mae()));
      CHECK(s.count == base.count);
    }
  }
  CHECK(code_of([&] { evaluate_samples(*m, samples, Mode::DF, 5); }) == Errc::ModeMismatch);
}

TEST_CASE("sweep: one training run per (T, L) serves every horizon") {
  const auto f = sine_frame(400, 2, 0.05);
  TrainRecipe recipe{spec_of(ModelKind::LinearDirect, 1, 1), {}};
  recipe.train.max_epochs = 3;
  std::size_t calls = 0;
  SweepOptions opt;
  opt.model_id = "lin";
  opt.dataset_id = "sine";
  opt.on_run = [&](const SweepResult& partial) {
    ++calls;
    CHECK(partial.runs.size() == calls);
  };
  const auto res = sweep(recipe, f, {{4}, {2}, {6, 2, 4}, {Mode::EF}, 1}, opt);
  CHECK(calls == 1);
  REQUIRE(res.runs.size() == 1);
  REQUIRE(res.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(res.records[i].horizon == 2 * (i + 1));
    CHECK(res.records[i].run_id == 1);
    CHECK(res.records[i].ok());
    CHECK(res.records[i].model == "lin");
  }

  calls = 0;
  const auto both = sweep(recipe, f, {{4, 8}, {2, 4}, {2, 4}, {Mode::DF, Mode::EF}, 1}, opt);
  CHECK(both.runs.size() == 4);
  CHECK(calls == 4);
  CHECK(both.records.size() == 16);
  std::size_t mismatched = 0;
  for (const auto& r : both.records) {
    if (r.mode == Mode::DF && r.output_length < r.horizon) {
      CHECK(r.status == status::mode_mismatch);
      CHECK(std::isnan(r.mse));
      ++mismatched;
    } else {
      CHECK(r.ok());
    }
  }
  CHECK(mismatched == 2);
  CHECK(std::is_sorted(both.records.begin(), both.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.input_length, a.output_length, a.horizon, a.mode) <
           std::tie(b.input_length, b.output_length, b.horizon, b.mode);
  }));
}

TEST_CASE("sweep: failures become statuses") {
  const auto f = sine_frame(100, 1);
  TrainRecipe recipe{spec_of(ModelKind::LinearDirect, 1, 1), {}};
  recipe.train.max_epochs = 2;
  // test split has 20 rows (+ context), so H = 40 has no window
  const auto res = sweep(recipe, f, {{4}, {2}, {2, 40}, {Mode::EF}, 1});
  CHECK(res.records[0].ok());
  CHECK(res.records[1].status == status::horizon_exceeds_data);

  // T + L beyond the training segment
  const auto big = sweep(recipe, f, {{70}, {2}, {2}, {Mode::EF}, 1});
  CHECK(big.runs[0].status == status::train_failed);
  CHECK_FALSE(big.runs[0].message.empty());
  CHECK(big.records[0].status == status::train_failed);

  CHECK(code_of([&] { sweep(recipe, f, {{4}, {}, {2}, {Mode::EF}, 1}); }) == Errc::InvalidSpec);
}

TEST_CASE("win ratio: worked examples") {
  std::vector<EvalRecord> recs{
      rec(Mode::DF, 96, 96, 96, 1.0, 1.0),  rec(Mode::EF, 96, 48, 96, 0.9, 0.9),
      rec(Mode::DF, 96, 192, 192, 1.0, 1.0), rec(Mode::EF, 96, 48, 192, 0.9, 1.1),
  };
  const auto c = compare(recs, ef_vs_df(48));
  CHECK(c.wins == 3);
  CHECK(c.losses == 1);
  CHECK(c.win_ratio == 0.75);

  std::vector<EvalRecord> tied{rec(Mode::DF, 8, 4, 4, 1.0, 2.0), rec(Mode::EF, 8, 2, 4, 1.0, 1.0)};
  auto cmp = ef_vs_df(2);
  CHECK(win_ratio(tied, cmp) == 1.0);
  cmp.left_wins_ties = false;
  const auto strict = compare(tied, cmp);
  CHECK(strict.ties == 1);
  CHECK(strict.win_ratio == 1.0);

  // mode_mismatch rows are ignored
  auto noisy = recs;
  noisy.push_back(rec(Mode::DF, 96, 48, 96, std::nan(""), std::nan("")));
  noisy.back().status = status::mode_mismatch;
  CHECK(win_ratio(noisy, ef_vs_df(48)) == 0.75);
}

TEST_CASE("property: swapping sides maps r to 1 - r without ties") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EvalRecord> recs;
    const std::size_t cells = rand_int(rng, 1, 6);
    for (std::size_t i = 0; i < cells; ++i) {
      const std::size_t h = 10 * (i + 1);
      recs.push_back(rec(Mode::DF, 20, h, h, uniform(rng, 0, 1), uniform(rng, 0, 1)));
      recs.push_back(rec(Mode::EF, 20, 5, h, uniform(rng, 0, 1), uniform(rng, 0, 1)));
    }
    const auto fwd = ef_vs_df(5);
    WinComparison rev;
    rev.left = fwd.right;
    rev.right = fwd.left;
    CHECK(win_ratio(recs, fwd) + win_ratio(recs, rev) == doctest::Approx(1.0));
  }
}

TEST_CASE("win ratio: unmatched cells") {
  std::vector<EvalRecord> recs{rec(Mode::EF, 96, 48, 96, 1, 1)};
  CHECK(code_of([&] { compare(recs, ef_vs_df(48)); }) == Errc::UnmatchedCell);
  CHECK(code_of([&] { compare(recs, ef_vs_df(12)); }) == Errc::UnmatchedCell);
  recs.push_back(rec(Mode::DF, 96, 96, 96, 1, 1));
  recs.push_back(rec(Mode::DF, 96, 96, 96, 2, 2));
  CHECK(code_of([&] { compare(recs, ef_vs_df(48)); }) == Errc::UnmatchedCell);

  // different T only pairs up when T is not part of the key
  std::vector<EvalRecord> cross{rec(Mode::EF, 336, 48, 96, 1, 1), rec(Mode::DF, 96, 96, 96, 2, 2)};
  auto cmp = ef_vs_df(48);
  CHECK(code_of([&] { compare(cross, cmp); }) == Errc::UnmatchedCell);
  cmp.match_input_length = false;
  CHECK(win_ratio(cross, cmp) == 1.0);
}

TEST_CASE("extreme horizon") {
  const auto test = periodic(130, {1, -1, 2, 0, 3});
  const auto m = naive(10, 5, 5);
  const auto recs = extreme_horizon_eval(*m, test, 10, {5, 50, 120});
  REQUIRE(recs.size() == 3);
  for (const auto& r : recs) {
    CHECK(r.ok());
    CHECK(r.mse == 0.0);
    CHECK(r.mode == Mode::EF);
  }
  CHECK(recs.back().n_windows == 1);
  CHECK(code_of([&] { extreme_horizon_eval(*m, test, 10, {121}); }) == Errc::HorizonExceedsData);
  CHECK(code_of([&] { extreme_horizon_eval(*m, test, 10, {50, 5}); }) == Errc::InvalidSpec);
  CHECK(code_of([&] { extreme_horizon_eval(*m, test, 10, {}); }) == Errc::InvalidSpec);

  // NaN from the third block on: short horizons survive
  Constant poison(10, 5, 0.0, 3);
  const auto mixed = extreme_horizon_eval(poison, test, 10, {5, 50});
  CHECK(mixed[0].ok());
  CHECK(mixed[1].status == status::non_finite_block);
}

TEST_CASE("report CSV roundtrip") {
  std::vector<EvalRecord> recs{rec(Mode::DF, 96, 96, 96, 0.404, 0.5, "dlinear"),
                               rec(Mode::EF, 96, 48, 720, 1.0 / 3.0, 2.5e-7, "dlinear")};
  recs.push_back(rec(Mode::DF, 96, 48, 720, std::nan(""), std::nan("")));
  recs.back().status = status::mode_mismatch;
  recs.back().n_windows = 0;
  const auto text = report_to_csv(recs);
  CHECK(text.rfind("model,dataset,T,L,H,mode,mse,mae,n_windows,status\n", 0) == 0);
  CHECK(text.find("dlinear,d,96,96,96,DF,0.404,0.5,1,ok\n") != std::string::npos);
  const auto back = report_from_csv(text);
  REQUIRE(back.size() == 3);
  CHECK(back[1].mse == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(back[1].mode == Mode::EF);
  CHECK(std::isnan(back[2].mse));
  CHECK(back[2].status == status::mode_mismatch);
  CHECK(report_to_csv(back) == text);

  CHECK(code_of([] { report_from_csv("a,b\n"); }) == Errc::Config);
  CHECK(code_of([] { report_from_csv(""); }) == Errc::EmptyFile);
  CHECK(code_of([] {
          report_from_csv("model,dataset,T,L,H,mode,mse,mae,n_windows,status\nm,d,x,1,1,EF,1,1,1,ok\n");
        }) == Errc::Config);
}
