#pragma once

#include "efcast/evaluation.hpp"
#include "efcast/forecaster.hpp"
#include "efcast/timeseries.hpp"
#include "efcast/training.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace efcast {

struct DatasetConfig {
  std::filesystem::path path;  // resolved against the config file's directory
  std::string name;            // defaults to the file stem
  CsvSchema schema;
};

struct EvalSection {
  std::vector<Mode> modes{Mode::DF, Mode::EF};
  std::vector<std::size_t> input_lengths;   // defaults to the model's T
  std::vector<std::size_t> output_lengths;  // defaults to the model's L
  std::vector<std::size_t> horizons;
  std::size_t stride = 1;
};

struct GradSection {
  bool enabled = false;
  std::vector<std::size_t> boundaries;  // empty: default partition
};

/// One JSON document per run:
///
///   {"dataset": {"path", "name"?, "timestamp_column"?, "channels"?},
///    "split": {"ratios": [6, 2, 2], "lookback_overlap": true},
///    "standardize": true,
///    "model": {"kind", "T", "L", "period"?, "per_channel"?, "kernel"?, "hidden"?},
///    "train": {"max_epochs", "patience", "learning_rate", "batch_size", ...},
///    "eval": {"modes" | "mode", "T", "L", "H", "stride"},
///    "grad": {"enabled", "boundaries"},
///    "output_dir": "out", "seed": 0}
///
/// Model and shuffle seeds are derived from `seed`.
struct RunConfig {
  DatasetConfig dataset;
  SplitSpec split;
  bool standardize = true;
  ForecasterSpec model;
  TrainConfig train;
  std::optional<EvalSection> eval;
  GradSection grad;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::string text;  // the document as read, for the config hash

  /// Sets `seed` and re-derives the init and shuffle sub-seeds.
  void set_seed(std::uint64_t value);
  std::uint64_t hash() const noexcept;
};

/// Throws Errc::Config for malformed documents, unknown keys, invalid values
/// or a dataset path that does not exist.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

} // namespace efcast
