#include "efcast/timeseries.hpp"

#include "efcast/error.hpp"
#include "efcast/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <string_view>

namespace efcast {

SeriesFrame::SeriesFrame(Matrix values, std::vector<std::string> channel_names,
                         std::vector<std::string> timestamps, std::size_t context_rows)
    : values_(std::move(values)), channel_names_(std::move(channel_names)),
      timestamps_(std::move(timestamps)), context_rows_(context_rows) {
  if (values_.rows() < 1 || values_.cols() < 1)
    throw Error(Errc::ShapeMismatch, "a series frame needs at least one step and one channel");
  if (channel_names_.size() != n_channels())
    throw Error(Errc::ShapeMismatch, "expected " + std::to_string(n_channels()) +
                                         " channel names, got " +
                                         std::to_string(channel_names_.size()));
  if (std::set<std::string>(channel_names_.begin(), channel_names_.end()).size() !=
      channel_names_.size())
    throw Error(Errc::ShapeMismatch, "channel names must be distinct");
  if (!timestamps_.empty() && timestamps_.size() != n_steps())
    throw Error(Errc::ShapeMismatch, "timestamp count does not match step count");
  if (!values_.allFinite()) throw Error(Errc::NonNumericCell, "series contains NaN or Inf");
  if (context_rows_ >= n_steps())
    throw Error(Errc::DegenerateSplit, "context rows leave no target rows");
}

SeriesFrame SeriesFrame::slice(std::size_t begin, std::size_t end, std::size_t context_rows) const {
  if (begin >= end || end > n_steps())
    throw Error(Errc::DegenerateSplit, "empty or out-of-range slice [" + std::to_string(begin) +
                                           ", " + std::to_string(end) + ")");
  const auto rows = static_cast<Eigen::Index>(end - begin);
  std::vector<std::string> ts;
  if (!timestamps_.empty())
    ts.assign(timestamps_.begin() + static_cast<std::ptrdiff_t>(begin),
              timestamps_.begin() + static_cast<std::ptrdiff_t>(end));
  return SeriesFrame(values_.middleRows(static_cast<Eigen::Index>(begin), rows), channel_names_,
                     std::move(ts), context_rows);
}

SeriesFrame SeriesFrame::trimmed_for(std::size_t input_length) const {
  if (context_rows_ <= input_length) return *this;
  const std::size_t drop = context_rows_ - input_length;
  return slice(drop, n_steps(), input_length);
}

SeriesFrame SeriesFrame::with_values(Matrix values) const {
  return SeriesFrame(std::move(values), channel_names_, timestamps_, context_rows_);
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
    return std::nullopt;
  return value;
}

} // namespace

SeriesFrame parse_csv(const std::string& text, const CsvSchema& schema) {
  std::vector<std::string_view> lines;
  std::string_view rest(text);
  if (rest.substr(0, 3) == "\xEF\xBB\xBF") rest.remove_prefix(3);
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw Error(Errc::EmptyFile, "no header row");
  if (lines.size() == 1) throw Error(Errc::EmptyFile, "header but no data rows");

  std::vector<std::string> header = split_csv_line(lines.front());
  for (auto& h : header) h = std::string(trim(h));
  const auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(Errc::MissingColumn, "column '" + name + "' not found");
    return static_cast<std::size_t>(it - header.begin());
  };

  std::optional<std::size_t> ts_col;
  if (schema.timestamp_column) ts_col = column_of(*schema.timestamp_column);

  std::vector<std::size_t> cols;
  std::vector<std::string> names;
  if (schema.channels.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (ts_col && c == *ts_col) continue;
      cols.push_back(c);
      names.push_back(header[c]);
    }
  } else {
    for (const auto& name : schema.channels) {
      cols.push_back(column_of(name));
      names.push_back(name);
    }
  }
  if (cols.empty()) throw Error(Errc::MissingColumn, "no numeric columns selected");

  const std::size_t n_rows = lines.size() - 1;
  Matrix values(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(cols.size()));
  std::vector<std::string> timestamps;
  if (ts_col) timestamps.reserve(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto cells = split_csv_line(lines[r + 1]);
    const auto cell_at = [&](std::size_t c) -> const std::string& {
      if (c >= cells.size())
        throw Error(Errc::MissingColumn, "row " + std::to_string(r + 1) + " has only " +
                                             std::to_string(cells.size()) + " cells");
      return cells[c];
    };
    if (ts_col) timestamps.emplace_back(trim(cell_at(*ts_col)));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto& cell = cell_at(cols[j]);
      const auto v = parse_real(cell);
      if (!v) throw NonNumericCellError(r + 1, cols[j], cell);
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  return SeriesFrame(std::move(values), std::move(names), std::move(timestamps));
}

SeriesFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  return parse_csv(read_file(path), schema);
}

SplitFrames chronological_split(const SeriesFrame& frame, const SplitSpec& spec,
                                std::size_t max_input_length) {
  if (spec.train == 0 || spec.val == 0 || spec.test == 0)
    throw Error(Errc::DegenerateSplit, "split weights must be positive");
  const std::size_t n = frame.n_steps();
  const std::size_t total = spec.train + spec.val + spec.test;
  const std::size_t b1 = n * spec.train / total;
  const std::size_t b2 = n * (spec.train + spec.val) / total;
  if (b1 == 0 || b2 <= b1 || n <= b2)
    throw Error(Errc::DegenerateSplit, std::to_string(n) + " steps yield segments of " +
                                           std::to_string(b1) + ", " + std::to_string(b2 - b1) +
                                           ", " + std::to_string(n - b2) + " rows");
  const std::size_t ctx = spec.lookback_overlap ? max_input_length : 0;
  const std::size_t val_ctx = std::min(ctx, b1);
  const std::size_t test_ctx = std::min(ctx, b2);
  return SplitFrames{frame.slice(0, b1), frame.slice(b1 - val_ctx, b2, val_ctx),
                     frame.slice(b2 - test_ctx, n, test_ctx)};
}

StandardizeStats fit_standardize(const SeriesFrame& train) {
  const Matrix& v = train.values();
  const auto n = static_cast<double>(v.rows());
  StandardizeStats stats;
  stats.mean = v.colwise().mean().transpose();
  stats.std.resize(v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double var = (v.col(c).array() - stats.mean(c)).square().sum() / n;
    if (!(var > 0.0)) throw ZeroVarianceError(static_cast<std::size_t>(c));
    stats.std(c) = std::sqrt(var);
  }
  return stats;
}

namespace {
void check_stats(const SeriesFrame& frame, const StandardizeStats& stats) {
  const auto c = static_cast<Eigen::Index>(frame.n_channels());
  if (stats.mean.size() != c || stats.std.size() != c)
    throw Error(Errc::ShapeMismatch, "standardization stats do not match channel count");
}
} // namespace

SeriesFrame apply_standardize(const SeriesFrame& frame, const StandardizeStats& stats) {
  check_stats(frame, stats);
  Matrix out = (frame.values().rowwise() - stats.mean.transpose()).array().rowwise() /
               stats.std.transpose().array();
  return frame.with_values(std::move(out));
}

SeriesFrame invert_standardize(const SeriesFrame& frame, const StandardizeStats& stats) {
  check_stats(frame, stats);
  Matrix out = (frame.values().array().rowwise() * stats.std.transpose().array()).matrix();
  out.rowwise() += stats.mean.transpose();
  return frame.with_values(std::move(out));
}

std::size_t window_count(std::size_t n_steps, std::size_t input_length,
                         std::size_t output_length) {
  const std::size_t span = input_length + output_length;
  return n_steps >= span ? n_steps - span + 1 : 0;
}

WindowSequence::WindowSequence(const SeriesFrame& frame, std::size_t input_length,
                               std::size_t output_length, std::size_t stride)
    : frame_(&frame), input_length_(input_length), output_length_(output_length),
      stride_(stride) {
  if (input_length == 0 || output_length == 0)
    throw Error(Errc::InvalidSpec, "window lengths must be positive");
  if (stride == 0) throw Error(Errc::InvalidSpec, "stride must be positive");
  const std::size_t n = window_count(frame.n_steps(), input_length, output_length);
  count_ = n == 0 ? 0 : (n - 1) / stride + 1;
}

WindowSample WindowSequence::operator[](std::size_t i) const {
  const auto o = static_cast<Eigen::Index>(origin(i));
  const auto t = static_cast<Eigen::Index>(input_length_);
  const auto l = static_cast<Eigen::Index>(output_length_);
  const Matrix& v = frame_->values();
  return WindowSample{v.middleRows(o, t), v.middleRows(o + t, l), origin(i)};
}

WindowSequence iter_windows(const SeriesFrame& frame, std::size_t input_length,
                            std::size_t output_length, std::size_t stride) {
  return WindowSequence(frame, input_length, output_length, stride);
}

void gather_columns(const WindowSequence& windows, std::span<const std::size_t> indices, Matrix& x,
                    Matrix& y) {
  const Matrix& v = windows.frame().values();
  const auto c = v.cols();
  const auto t = static_cast<Eigen::Index>(windows.input_length());
  const auto l = static_cast<Eigen::Index>(windows.output_length());
  const auto n = static_cast<Eigen::Index>(indices.size()) * c;
  x.resize(t, n);
  y.resize(l, n);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto o = static_cast<Eigen::Index>(windows.origin(indices[b]));
    const auto col0 = static_cast<Eigen::Index>(b) * c;
    x.middleCols(col0, c) = v.middleRows(o, t);
    y.middleCols(col0, c) = v.middleRows(o + t, l);
  }
}

void gather_columns(std::span<const WindowSample> samples, Matrix& x, Matrix& y) {
  if (samples.empty()) throw Error(Errc::EmptyBatch, "no samples to gather");
  const auto t = samples.front().x.rows();
  const auto l = samples.front().y.rows();
  const auto c = samples.front().x.cols();
  x.resize(t, static_cast<Eigen::Index>(samples.size()) * c);
  y.resize(l, static_cast<Eigen::Index>(samples.size()) * c);
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const auto& s = samples[b];
    if (s.x.rows() != t || s.x.cols() != c || s.y.rows() != l || s.y.cols() != c)
      throw Error(Errc::ShapeMismatch, "batch samples differ in shape");
    const auto col0 = static_cast<Eigen::Index>(b) * c;
    x.middleCols(col0, c) = s.x;
    y.middleCols(col0, c) = s.y;
  }
}

} // namespace efcast
