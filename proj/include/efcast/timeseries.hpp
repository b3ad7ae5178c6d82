#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace efcast {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Time-ordered observations: rows are time steps, columns are channels.
///
/// Frames cut from a larger series for evaluation may carry leading
/// `context_rows`: history borrowed from the preceding split segment. Those
/// rows feed input windows but are never forecast targets.
class SeriesFrame {
public:
  SeriesFrame(Matrix values, std::vector<std::string> channel_names,
              std::vector<std::string> timestamps = {}, std::size_t context_rows = 0);

  std::size_t n_steps() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t n_channels() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& channel_names() const noexcept { return channel_names_; }
  const std::vector<std::string>& timestamps() const noexcept { return timestamps_; }
  std::size_t context_rows() const noexcept { return context_rows_; }

  /// Rows [begin, end), the first `context_rows` of which are flagged as context.
  SeriesFrame slice(std::size_t begin, std::size_t end, std::size_t context_rows = 0) const;

  /// Drops leading context not needed by an input window of length `input_length`,
  /// so that the first window's target starts at the first non-context row.
  SeriesFrame trimmed_for(std::size_t input_length) const;

  /// Same shape and labels, new values.
  SeriesFrame with_values(Matrix values) const;

private:
  Matrix values_;
  std::vector<std::string> channel_names_;
  std::vector<std::string> timestamps_;
  std::size_t context_rows_ = 0;
};

struct CsvSchema {
  std::optional<std::string> timestamp_column;
  /// Columns to load, in order. Empty selects every non-timestamp column.
  std::vector<std::string> channels;
};

SeriesFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
SeriesFrame parse_csv(const std::string& text, const CsvSchema& schema = {});

struct SplitSpec {
  /// Relative weights, e.g. {6, 2, 2}; boundaries floor the cumulative fractions.
  unsigned train = 6;
  unsigned val = 2;
  unsigned test = 2;
  bool lookback_overlap = true;
};

struct SplitFrames {
  SeriesFrame train;
  SeriesFrame val;
  SeriesFrame test;
};

/// Contiguous train/val/test segments. With `lookback_overlap`, val and test
/// borrow up to `max_input_length` preceding rows as context.
SplitFrames chronological_split(const SeriesFrame& frame, const SplitSpec& spec,
                                std::size_t max_input_length = 0);

struct StandardizeStats {
  Vector mean;
  Vector std;
};

/// Per-channel mean and population standard deviation over all rows of `train`.
StandardizeStats fit_standardize(const SeriesFrame& train);
SeriesFrame apply_standardize(const SeriesFrame& frame, const StandardizeStats& stats);
SeriesFrame invert_standardize(const SeriesFrame& frame, const StandardizeStats& stats);

struct WindowSample {
  Matrix x;                  // T x C
  Matrix y;                  // L x C
  std::size_t origin_index;  // frame row of x(0, :)
};

/// max(0, n_steps - (T + L) + 1)
std::size_t window_count(std::size_t n_steps, std::size_t input_length, std::size_t output_length);

/// Lazy, random-access view over the sliding windows of a frame. The frame
/// must outlive the view.
class WindowSequence {
public:
  WindowSequence(const SeriesFrame& frame, std::size_t input_length, std::size_t output_length,
                 std::size_t stride);

  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  std::size_t origin(std::size_t i) const noexcept { return i * stride_; }
  WindowSample operator[](std::size_t i) const;

  std::size_t input_length() const noexcept { return input_length_; }
  std::size_t output_length() const noexcept { return output_length_; }
  const SeriesFrame& frame() const noexcept { return *frame_; }

  class iterator {
  public:
    using iterator_category = std::input_iterator_tag;
    using value_type = WindowSample;
    using difference_type = std::ptrdiff_t;

    iterator(const WindowSequence* seq, std::size_t i) : seq_(seq), i_(i) {}
    WindowSample operator*() const { return (*seq_)[i_]; }
    iterator& operator++() {
      ++i_;
      return *this;
    }
    bool operator==(const iterator& o) const { return i_ == o.i_; }
    bool operator!=(const iterator& o) const { return i_ != o.i_; }

  private:
    const WindowSequence* seq_;
    std::size_t i_;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, count_}; }

private:
  const SeriesFrame* frame_;
  std::size_t input_length_;
  std::size_t output_length_;
  std::size_t stride_;
  std::size_t count_;
};

WindowSequence iter_windows(const SeriesFrame& frame, std::size_t input_length,
                            std::size_t output_length, std::size_t stride = 1);

/// Packs windows column-wise: column b*C + c holds channel c of window b.
/// X is T x (B*C), Y is L x (B*C).
void gather_columns(const WindowSequence& windows, std::span<const std::size_t> indices, Matrix& x,
                    Matrix& y);
void gather_columns(std::span<const WindowSample> samples, Matrix& x, Matrix& y);

} // namespace efcast
