#pragma once

// Shared helpers for the unit and acceptance suites: deterministic random
// generators, synthetic series and scratch directories.

#include "efcast/forecaster.hpp"
#include "efcast/timeseries.hpp"
#include "efcast/util.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace efcast::testing {

inline std::size_t rand_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform_index(rng, hi - lo + 1));
}

inline Matrix rand_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -scale, scale);
  return m;
}

inline Vector rand_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform(rng, -scale, scale);
  return v;
}

inline std::vector<std::string> channel_names(std::size_t c) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < c; ++i) names.push_back("c" + std::to_string(i));
  return names;
}

inline SeriesFrame frame_of(Matrix values) {
  const auto c = static_cast<std::size_t>(values.cols());
  return SeriesFrame(std::move(values), channel_names(c));
}

/// Sum of two sinusoids per channel plus optional uniform noise.
inline SeriesFrame sine_frame(std::size_t n, std::size_t c, double noise = 0.0,
                              std::uint64_t seed = 1) {
  Rng rng(seed);
  Matrix v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  for (std::size_t j = 0; j < c; ++j) {
    const double p1 = 24.0 + 3.0 * static_cast<double>(j), p2 = 7.0 + static_cast<double>(j);
    for (std::size_t t = 0; t < n; ++t) {
      const double tt = static_cast<double>(t);
      v(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
          std::sin(2.0 * std::numbers::pi * tt / p1) +
          0.5 * std::cos(2.0 * std::numbers::pi * tt / p2 + static_cast<double>(j)) +
          (noise > 0.0 ? uniform(rng, -noise, noise) : 0.0);
    }
  }
  return frame_of(std::move(v));
}

inline ForecasterSpec spec_of(ModelKind kind, std::size_t t, std::size_t l, std::size_t c = 1,
                              std::uint64_t seed = 7) {
  ForecasterSpec s;
  s.kind = kind;
  s.input_length = t;
  s.output_length = l;
  s.channels = c;
  s.seed = seed;
  if (kind == ModelKind::DecompLinear) s.kernel = (t % 2 == 1) ? t : t - 1;
  if (kind == ModelKind::Mlp) s.hidden = 8;
  return s;
}

/// A scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("efcast_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

/// CSV text with a header row c0,c1,... (and a leading date column when asked).
inline std::string to_csv(const Matrix& m, bool with_date = false) {
  std::string s = with_date ? "date" : "";
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    s += (with_date || c ? "," : "") + std::string("c") + std::to_string(c);
  s += "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (with_date) s += "t" + std::to_string(r);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      s += (with_date || c ? "," : "") + format_real(m(r, c));
    s += "\n";
  }
  return s;
}

} // namespace efcast::testing
