#include "doctest.h"

#include "efcast/error.hpp"
#include "efcast/timeseries.hpp"

#include "../support/support.hpp"

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

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

} // namespace

TEST_CASE("csv: header plus three rows, two channels") {
  const auto f = parse_csv("a,b\n1,2\n3,4\n5,6\n");
  CHECK(f.n_steps() == 3);
  CHECK(f.n_channels() == 2);
  CHECK(f.channel_names() == std::vector<std::string>{"a", "b"});
  CHECK(f.values()(2, 1) == 6.0);
  CHECK(f.timestamps().empty());
}

TEST_CASE("csv: timestamp column, channel selection and order") {
  CsvSchema schema{"date", {"OT", "HUFL"}};
  const auto f = parse_csv("date,HUFL,OT\n2016-07-01 00:00:00,5.8,30.5\n2016-07-01 01:00:00,5.6,27.7\n",
                           schema);
  CHECK(f.n_channels() == 2);
  CHECK(f.channel_names() == std::vector<std::string>{"OT", "HUFL"});
  CHECK(f.values()(0, 0) == 30.5);
  CHECK(f.values()(1, 1) == 5.6);
  CHECK(f.timestamps() == std::vector<std::string>{"2016-07-01 00:00:00", "2016-07-01 01:00:00"});
}

TEST_CASE("csv: quoting, CRLF, BOM and trailing blank lines") {
  const auto f = parse_csv("\xEF\xBB\xBF\"x,1\",y\r\n\"1.5\",-2e3\r\n+3,4\r\n\r\n");
  CHECK(f.channel_names() == std::vector<std::string>{"x,1", "y"});
  CHECK(f.values()(0, 1) == -2000.0);
  CHECK(f.values()(1, 0) == 3.0);
}

TEST_CASE("csv: errors") {
  CHECK(code_of([] { parse_csv(""); }) == Errc::EmptyFile);
  CHECK(code_of([] { parse_csv("a,b\n"); }) == Errc::EmptyFile);
  CHECK(code_of([] { parse_csv("a,b\n1,2\n", {std::nullopt, {"c"}}); }) == Errc::MissingColumn);
  CHECK(code_of([] { parse_csv("a\n1\n", {"date", {}}); }) == Errc::MissingColumn);
  CHECK(code_of([] { parse_csv("a,b\n1,2\n3\n"); }) == Errc::MissingColumn);
  CHECK(code_of([] { parse_csv("a\nnan\n"); }) == Errc::NonNumericCell);
  CHECK(code_of([] { parse_csv("a\n\n2\n"); }) == Errc::NonNumericCell);

  try {
    parse_csv("a,b\n1,2\n3,abc\n");
    FAIL("no error");
  } catch (const NonNumericCellError& e) {
    CHECK(e.row() == 2);
    CHECK(e.col() == 1);
  }
}

TEST_CASE("csv: load from file") {
  TempDir dir("csv");
  write_file_atomic(dir / "s.csv", "v\n1\n2\n");
  CHECK(load_csv(dir / "s.csv").n_steps() == 2);
  CHECK(code_of([&] { load_csv(dir / "missing.csv"); }) == Errc::Io);
}

TEST_CASE("frame invariants") {
  CHECK(code_of([] { SeriesFrame(Matrix(0, 1), {"a"}); }) == Errc::ShapeMismatch);
  CHECK(code_of([] { SeriesFrame(Matrix::Zero(2, 2), {"a", "a"}); }) == Errc::ShapeMismatch);
  CHECK(code_of([] { SeriesFrame(Matrix::Zero(2, 2), {"a"}); }) == Errc::ShapeMismatch);
  CHECK(code_of([] { SeriesFrame(Matrix::Zero(2, 1), {"a"}, {"t0"}); }) == Errc::ShapeMismatch);
  Matrix bad = Matrix::Zero(2, 1);
  bad(1, 0) = std::numeric_limits<double>::infinity();
  CHECK(code_of([&] { SeriesFrame(bad, {"a"}); }) == Errc::NonNumericCell);
}

TEST_CASE("split: flooring arithmetic") {
  const auto f = frame_of(Matrix::Random(10, 1));
  const auto s = chronological_split(f, {6, 2, 2, false});
  CHECK(s.train.n_steps() == 6);
  CHECK(s.val.n_steps() == 2);
  CHECK(s.test.n_steps() == 2);
  const auto s2 = chronological_split(f, {7, 1, 2, false});
  CHECK(s2.train.n_steps() == 7);
  CHECK(s2.val.n_steps() == 1);
  CHECK(s2.test.n_steps() == 2);
}

TEST_CASE("split: borrowed context on 100 rows with max T = 5") {
  Matrix v(100, 1);
  for (int i = 0; i < 100; ++i) v(i, 0) = i;
  const auto s = chronological_split(frame_of(v), {6, 2, 2, true}, 5);
  // val spans rows 55..80 (half-open), rows 55..60 are context
  CHECK(s.val.n_steps() == 25);
  CHECK(s.val.context_rows() == 5);
  CHECK(s.val.values()(0, 0) == 55.0);
  CHECK(s.val.values()(24, 0) == 79.0);
  CHECK(s.test.values()(0, 0) == 75.0);
  CHECK(s.test.context_rows() == 5);
  CHECK(s.train.context_rows() == 0);
}

TEST_CASE("split: nominal segments reconstruct the frame") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = rand_int(rng, 5, 300);
    const auto f = frame_of(rand_matrix(rng, n, 2));
    const SplitSpec spec{static_cast<unsigned>(rand_int(rng, 1, 9)),
                         static_cast<unsigned>(rand_int(rng, 1, 3)),
                         static_cast<unsigned>(rand_int(rng, 1, 3)), true};
    std::optional<SplitFrames> split;
    try {
      split = chronological_split(f, spec, rand_int(rng, 0, 50));
    } catch (const Error& e) {
      CHECK(e.code() == Errc::DegenerateSplit);
      continue;
    }
    const SplitFrames& s = *split;
    Matrix joined(static_cast<Eigen::Index>(n), 2);
    Eigen::Index at = 0;
    for (const SeriesFrame* part : {&s.train, &s.val, &s.test}) {
      const auto own = static_cast<Eigen::Index>(part->n_steps() - part->context_rows());
      joined.middleRows(at, own) = part->values().bottomRows(own);
      at += own;
    }
    REQUIRE(at == static_cast<Eigen::Index>(n));
    CHECK(joined == f.values());
  }
}

TEST_CASE("split: degenerate") {
  CHECK(code_of([] { chronological_split(frame_of(Matrix::Zero(2, 1)), {6, 2, 2, false}); }) ==
        Errc::DegenerateSplit);
  CHECK(code_of([] { chronological_split(frame_of(Matrix::Zero(30, 1)), {6, 0, 2, false}); }) ==
        Errc::DegenerateSplit);
}

TEST_CASE("standardize: two-point arithmetic and zero variance") {
  const auto stats = fit_standardize(frame_of(column({0, 2})));
  CHECK(stats.mean(0) == 1.0);
  CHECK(stats.std(0) == 1.0);
  CHECK(apply_standardize(frame_of(column({3})), stats).values()(0, 0) == 2.0);

  try {
    Matrix v(3, 2);
    v << 1, 5, 2, 5, 3, 5;
    fit_standardize(frame_of(v));
    FAIL("no error");
  } catch (const ZeroVarianceError& e) {
    CHECK(e.channel() == 1);
  }
}

TEST_CASE("standardize: apply and invert are inverse") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = frame_of(rand_matrix(rng, rand_int(rng, 2, 40), rand_int(rng, 1, 4), 50.0));
    const auto stats = fit_standardize(f);
    const auto there = apply_standardize(f, stats);
    CHECK((invert_standardize(there, stats).values() - f.values()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((apply_standardize(invert_standardize(there, stats), stats).values() - there.values())
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
    CHECK(there.values().colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("window_count formula") {
  CHECK(window_count(1000, 720, 96) == 185);
  CHECK(window_count(815, 720, 96) == 0);
  CHECK(window_count(816, 720, 96) == 1);
  CHECK(window_count(5, 2, 1) == 3);
}

TEST_CASE("iter_windows: origins, slicing and stride") {
  Matrix v(10, 1);
  for (int i = 0; i < 10; ++i) v(i, 0) = i;
  const auto f = frame_of(v);

  const auto f5 = f.slice(0, 5);  // windows view the frame; keep it alive
  const auto a = iter_windows(f5, 2, 1);
  REQUIRE(a.size() == 3);
  CHECK(a[0].origin_index == 0);
  CHECK(a[2].origin_index == 2);

  const auto b = iter_windows(f5, 2, 2);
  REQUIRE(b.size() == 2);
  CHECK(b[1].y(0, 0) == 3.0);
  CHECK(b[1].y(1, 0) == 4.0);

  std::vector<std::size_t> origins;
  for (const auto& w : iter_windows(f, 3, 1, 2)) origins.push_back(w.origin_index);
  CHECK(origins == std::vector<std::size_t>{0, 2, 4, 6});

  CHECK(iter_windows(f, 8, 3).empty());
}

TEST_CASE("iter_windows: enumeration matches window_count on random triples") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = rand_int(rng, 1, 120);
    const std::size_t t = rand_int(rng, 1, 60);
    const std::size_t l = rand_int(rng, 1, 60);
    const auto f = frame_of(rand_matrix(rng, n, 2));
    std::size_t count = 0;
    for (const auto& w : iter_windows(f, t, l)) {
      CHECK(w.origin_index == count);
      CHECK(w.x == f.values().middleRows(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(t)));
      CHECK(w.y == f.values().middleRows(static_cast<Eigen::Index>(count + t), static_cast<Eigen::Index>(l)));
      ++count;
    }
    CHECK(count == window_count(n, t, l));
  }
}

TEST_CASE("trimmed frames never place targets in borrowed context") {
  Matrix v(100, 1);
  for (int i = 0; i < 100; ++i) v(i, 0) = i;
  const auto s = chronological_split(frame_of(v), {6, 2, 2, true}, 12);
  for (std::size_t t : {1, 4, 12}) {
    const auto trimmed = s.val.trimmed_for(t);
    CHECK(trimmed.context_rows() == t);
    const auto windows = iter_windows(trimmed, t, 3);
    REQUIRE(!windows.empty());
    CHECK(windows[0].y(0, 0) == 60.0);               // first nominal val row
    CHECK(windows[windows.size() - 1].y(2, 0) == 79.0);  // last nominal val row
    CHECK(windows.size() == 20 - 3 + 1);
  }
}

TEST_CASE("gather_columns packs window b, channel c into column b*C + c") {
  Rng rng(9);
  const auto f = frame_of(rand_matrix(rng, 20, 3));
  const auto w = iter_windows(f, 4, 2);
  const std::vector<std::size_t> idx{5, 0, 7};
  Matrix x, y;
  gather_columns(w, idx, x, y);
  REQUIRE(x.rows() == 4);
  REQUIRE(x.cols() == 9);
  for (std::size_t b = 0; b < idx.size(); ++b)
    for (Eigen::Index c = 0; c < 3; ++c) {
      CHECK(x.col(static_cast<Eigen::Index>(b) * 3 + c) == w[idx[b]].x.col(c));
      CHECK(y.col(static_cast<Eigen::Index>(b) * 3 + c) == w[idx[b]].y.col(c));
    }
}
