#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace efcast {

enum class Errc {
  // ingestion / data
  MissingColumn,
  NonNumericCell,
  EmptyFile,
  DegenerateSplit,
  ZeroVariance,
  // models
  InvalidSpec,
  ShapeMismatch,
  EmptyBatch,
  EmptySegment,
  LengthMismatch,
  // training
  NoTrainWindows,
  NoValWindows,
  // rollout
  AccumLengthMismatch,
  NonFiniteBlock,
  InsufficientTruth,
  // evaluation
  NoTestWindows,
  ModeMismatch,
  UnmatchedCell,
  HorizonExceedsData,
  ShortInput,
  // plumbing
  Io,
  Config,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

class NonNumericCellError : public Error {
public:
  NonNumericCellError(std::size_t row, std::size_t col, const std::string& cell)
      : Error(Errc::NonNumericCell, "row " + std::to_string(row) + ", column " +
                                        std::to_string(col) + ": '" + cell + "'"),
        row_(row), col_(col) {}

  /// 1-based data row (header excluded) and 0-based column of the offending cell.
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

private:
  std::size_t row_;
  std::size_t col_;
};

class ZeroVarianceError : public Error {
public:
  explicit ZeroVarianceError(std::size_t channel)
      : Error(Errc::ZeroVariance, "channel " + std::to_string(channel) + " has zero variance"),
        channel_(channel) {}

  std::size_t channel() const noexcept { return channel_; }

private:
  std::size_t channel_;
};

} // namespace efcast
