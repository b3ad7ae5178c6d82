#include "efcast/cli.hpp"

#include "efcast/checkpoint.hpp"
#include "efcast/error.hpp"
#include "efcast/evaluation.hpp"
#include "efcast/gradient_analysis.hpp"
#include "efcast/rollout.hpp"
#include "efcast/run_config.hpp"
#include "efcast/training.hpp"
#include "efcast/util.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>

namespace efcast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Raised while reading inputs and options; maps to exit code 2.
struct ConfigFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> stride;
  bool trace = false;
  std::string checkpoint;
  std::string input;
  std::string timestamp_column;
  std::size_t horizon = 0;
  std::vector<std::string> reports;
  std::string comparisons;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Sidecar next to every run's outputs; the only file allowed to differ
/// between identical runs.
class RunMetadata {
public:
  RunMetadata(std::string command, std::uint64_t config_hash, std::optional<std::uint64_t> seed)
      : command_(std::move(command)), hash_(config_hash), seed_(seed),
        started_(std::chrono::steady_clock::now()), started_at_(utc_now()) {}

  void add_output(const fs::path& p) { outputs_.push_back(p.filename().string()); }

  void write(const fs::path& dir, std::string_view status) const {
    json j;
    j["command"] = command_;
    j["config_hash"] = hex64(hash_);
    j["version"] = EFCAST_VERSION;
    if (seed_) j["seed"] = *seed_;
    j["status"] = std::string(status);
    j["outputs"] = outputs_;
    j["started_at"] = started_at_;
    j["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    write_file_atomic(dir / "run_metadata.json", j.dump(1) + "\n");
  }

private:
  std::string command_;
  std::uint64_t hash_;
  std::optional<std::uint64_t> seed_;
  std::chrono::steady_clock::time_point started_;
  std::string started_at_;
  std::vector<std::string> outputs_;
};

RunConfig read_config(const Options& opt) {
  if (opt.config.empty()) throw ConfigFailure("--config is required");
  RunConfig cfg;
  try {
    cfg = load_run_config(opt.config);
  } catch (const Error& e) {
    throw ConfigFailure(e.what());
  }
  if (opt.seed) cfg.set_seed(*opt.seed);
  if (opt.stride) {
    if (*opt.stride < 1) throw ConfigFailure("--stride must be >= 1");
    if (cfg.eval) cfg.eval->stride = *opt.stride;
  }
  if (!opt.output.empty()) cfg.output_dir = opt.output;
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::Io, "cannot create " + dir.string() + ": " + ec.message());
}

struct PreparedData {
  SplitFrames frames;
  std::optional<StandardizeStats> stats;
  std::vector<std::string> channel_names;
};

PreparedData prepare(const RunConfig& cfg, std::size_t max_input_length) {
  const SeriesFrame raw = load_csv(cfg.dataset.path, cfg.dataset.schema);
  PreparedData d{chronological_split(raw, cfg.split, max_input_length), std::nullopt,
                 raw.channel_names()};
  if (cfg.standardize) {
    d.stats = fit_standardize(d.frames.train);
    d.frames.train = apply_standardize(d.frames.train, *d.stats);
    d.frames.val = apply_standardize(d.frames.val, *d.stats);
    d.frames.test = apply_standardize(d.frames.test, *d.stats);
  }
  return d;
}

void write_output(const fs::path& path, std::string_view text, RunMetadata& meta) {
  write_file_atomic(path, text);
  meta.add_output(path);
}

int cmd_train(const Options& opt, std::ostream& out) {
  RunConfig cfg = read_config(opt);
  RunMetadata meta("train", cfg.hash(), cfg.seed);
  ensure_dir(cfg.output_dir);
  try {
    const PreparedData d = prepare(cfg, cfg.model.input_length);
    cfg.model.channels = d.channel_names.size();
    auto model = build(cfg.model);
    const TrainHistory history = train(*model, d.frames.train, d.frames.val, cfg.train);
    write_output(cfg.output_dir / "checkpoint.json",
                 checkpoint_to_json(make_checkpoint(*model, d.channel_names, d.stats)), meta);
    write_output(cfg.output_dir / "history.csv", history_to_csv(history), meta);
    meta.write(cfg.output_dir, "ok");
    out << "trained " << to_string(cfg.model.kind) << " for " << history.epochs.size()
        << " epochs (best epoch " << history.best_epoch << ", val_mse "
        << format_real(history.best_val_mse()) << ")\n";
  } catch (...) {
    meta.write(cfg.output_dir, "failed");
    throw;
  }
  return kExitOk;
}

std::string matrix_csv(const Matrix& m, const std::vector<std::string>& header) {
  std::string s;
  for (std::size_t c = 0; c < header.size(); ++c) s += (c ? "," : "") + header[c];
  s += "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) s += (c ? "," : "") + format_real(m(r, c));
    s += "\n";
  }
  return s;
}

int cmd_predict(const Options& opt, std::ostream& out) {
  if (opt.checkpoint.empty() || opt.input.empty())
    throw ConfigFailure("predict needs --checkpoint and --input");
  if (opt.horizon < 1) throw ConfigFailure("--horizon must be >= 1");
  if (!fs::is_regular_file(opt.checkpoint))
    throw ConfigFailure("checkpoint not found: " + opt.checkpoint);
  if (!fs::is_regular_file(opt.input)) throw ConfigFailure("input not found: " + opt.input);

  Checkpoint ckpt;
  try {
    ckpt = load_checkpoint(opt.checkpoint);
  } catch (const Error& e) {
    throw ConfigFailure(e.what());
  }
  const fs::path dir = opt.output.empty() ? fs::path(".") : fs::path(opt.output);
  ensure_dir(dir);
  RunMetadata meta("predict", fnv1a64(read_file(opt.checkpoint)) ^ fnv1a64(read_file(opt.input)),
                   std::nullopt);
  try {
    CsvSchema schema;
    schema.channels = ckpt.channel_names;
    if (!opt.timestamp_column.empty()) schema.timestamp_column = opt.timestamp_column;
    SeriesFrame input = load_csv(opt.input, schema);
    const auto model = restore(ckpt);
    const auto t = model->spec().input_length;
    if (input.n_steps() < t)
      throw Error(Errc::ShortInput, "input has " + std::to_string(input.n_steps()) +
                                        " rows, the model needs " + std::to_string(t));
    if (input.n_channels() != model->spec().channels)
      throw Error(Errc::ShapeMismatch, "input has " + std::to_string(input.n_channels()) +
                                           " channels, the model expects " +
                                           std::to_string(model->spec().channels));
    if (ckpt.standardize) input = apply_standardize(input, *ckpt.standardize);
    const Matrix x = input.values().bottomRows(static_cast<Eigen::Index>(t));

    RolloutTrace trace;
    try {
      trace = rollout(*model, x, opt.horizon, opt.trace);
    } catch (const NonFiniteBlockError& e) {
      if (opt.trace) write_output(dir / "trace.json", trace_to_json(e.partial_trace()), meta);
      throw;
    }
    Matrix y = trace.y_hat;
    if (ckpt.standardize)
      y = invert_standardize(SeriesFrame(y, input.channel_names()), *ckpt.standardize).values();
    write_output(dir / "predictions.csv", matrix_csv(y, input.channel_names()), meta);
    if (opt.trace) write_output(dir / "trace.json", trace_to_json(trace), meta);
    meta.write(dir, "ok");
    out << "predicted " << opt.horizon << " steps in " << trace.blocks.size() << " block(s)\n";
  } catch (...) {
    meta.write(dir, "failed");
    throw;
  }
  return kExitOk;
}

std::string runs_csv(const std::vector<SweepRun>& runs) {
  std::string s = "run_id,T,L,status,epochs,best_epoch,best_val_mse\n";
  for (const auto& r : runs)
    s += std::to_string(r.run_id) + "," + std::to_string(r.input_length) + "," +
         std::to_string(r.output_length) + "," + r.status + "," +
         std::to_string(r.history.epochs.size()) + "," + std::to_string(r.history.best_epoch) +
         "," + format_real(r.history.best_val_mse()) + "\n";
  return s;
}

int cmd_sweep(const Options& opt, std::ostream& out) {
  const RunConfig cfg = read_config(opt);
  if (!cfg.eval) throw ConfigFailure("sweep needs an 'eval' section");
  RunMetadata meta("sweep", cfg.hash(), cfg.seed);
  ensure_dir(cfg.output_dir);
  const fs::path report = cfg.output_dir / "report.csv";
  const fs::path runs = cfg.output_dir / "runs.csv";
  try {
    const SeriesFrame raw = load_csv(cfg.dataset.path, cfg.dataset.schema);
    TrainRecipe recipe{cfg.model, cfg.train};
    SweepGrid grid{cfg.eval->input_lengths, cfg.eval->output_lengths, cfg.eval->horizons,
                   cfg.eval->modes, cfg.eval->stride};
    SweepOptions so;
    so.split = cfg.split;
    so.standardize = cfg.standardize;
    so.model_id = std::string(to_string(cfg.model.kind));
    so.dataset_id = cfg.dataset.name;
    so.on_run = [&](const SweepResult& partial) {
      write_file_atomic(report, report_to_csv(partial.records));
      write_file_atomic(runs, runs_csv(partial.runs));
    };
    const SweepResult result = sweep(recipe, raw, grid, so);
    write_output(report, report_to_csv(result.records), meta);
    write_output(runs, runs_csv(result.runs), meta);
    meta.write(cfg.output_dir, "ok");
    std::size_t ok = 0;
    for (const auto& r : result.records) ok += r.ok();
    out << result.records.size() << " records (" << ok << " ok) from " << result.runs.size()
        << " training run(s)\n";
  } catch (...) {
    meta.write(cfg.output_dir, "failed");
    throw;
  }
  return kExitOk;
}

int cmd_grad(const Options& opt, std::ostream& out) {
  RunConfig cfg = read_config(opt);
  RunMetadata meta("grad", cfg.hash(), cfg.seed);
  SegmentPartition partition;
  try {
    partition = cfg.grad.boundaries.empty() ? default_partition(cfg.model.output_length)
                                            : partition_from_boundaries(cfg.grad.boundaries);
  } catch (const Error& e) {
    throw ConfigFailure(std::string("grad.boundaries: ") + e.what());
  }
  if (partition.output_length != cfg.model.output_length)
    throw ConfigFailure("grad.boundaries must end at the model's L");
  ensure_dir(cfg.output_dir);
  try {
    const PreparedData d = prepare(cfg, cfg.model.input_length);
    cfg.model.channels = d.channel_names.size();
    const GradAnalysis ga = analyze_training(cfg.model, d.frames.train, d.frames.val, cfg.train,
                                             partition);
    write_output(cfg.output_dir / "grad_similarity.csv", similarity_csv(ga.stats), meta);
    write_output(cfg.output_dir / "grad_dynamics.csv", dynamics_csv(ga.stats), meta);
    write_output(cfg.output_dir / "history.csv", history_to_csv(ga.history), meta);
    meta.write(cfg.output_dir, "ok");
    out << ga.stats.snapshots.size() << " gradient snapshots over "
        << partition.segments.size() << " segment(s)\n";
  } catch (...) {
    meta.write(cfg.output_dir, "failed");
    throw;
  }
  return kExitOk;
}

RecordSelector selector_from_json(const json& j) {
  if (!j.is_object()) throw ConfigFailure("a selector must be a JSON object");
  RecordSelector s;
  for (const auto& [key, v] : j.items()) {
    if (key == "mode")
      s.mode = mode_from_string(v.get<std::string>());
    else if (key == "model")
      s.model = v.get<std::string>();
    else if (key == "T")
      s.input_length = v.get<std::size_t>();
    else if (key == "L")
      s.output_length = v.get<std::size_t>();
    else if (key == "L_equals_H")
      s.output_equals_horizon = v.get<bool>();
    else
      throw ConfigFailure("unknown selector key '" + key + "'");
  }
  return s;
}

std::vector<WinComparison> read_comparisons(const std::string& path) {
  if (!fs::is_regular_file(path)) throw ConfigFailure("comparisons file not found: " + path);
  std::vector<WinComparison> out;
  try {
    const json doc = json::parse(read_file(path));
    if (!doc.is_array()) throw ConfigFailure("comparisons must be a JSON array");
    for (const auto& c : doc) {
      WinComparison w;
      w.name = c.at("name").get<std::string>();
      w.left = selector_from_json(c.at("left"));
      w.right = selector_from_json(c.at("right"));
      w.left_wins_ties = c.value("left_wins_ties", true);
      w.match_input_length = c.value("match_T", true);
      out.push_back(std::move(w));
    }
  } catch (const json::exception& e) {
    throw ConfigFailure(std::string("malformed comparisons: ") + e.what());
  } catch (const Error& e) {
    throw ConfigFailure(e.what());
  }
  return out;
}

/// Without a comparisons file: EF at each output length against native DF (L = H).
std::vector<WinComparison> default_comparisons(const std::vector<EvalRecord>& records) {
  std::set<std::size_t> ls;
  for (const auto& r : records)
    if (r.ok() && r.mode == Mode::EF) ls.insert(r.output_length);
  std::vector<WinComparison> out;
  for (std::size_t l : ls) {
    WinComparison w;
    w.name = "EF_L" + std::to_string(l) + "_vs_DF";
    w.left.mode = Mode::EF;
    w.left.output_length = l;
    w.right.mode = Mode::DF;
    w.right.output_equals_horizon = true;
    out.push_back(std::move(w));
  }
  return out;
}

int cmd_report(const Options& opt, std::ostream& out) {
  if (opt.reports.empty()) throw ConfigFailure("report needs at least one --reports CSV");
  std::vector<EvalRecord> records;
  std::string all_text;
  for (const auto& p : opt.reports) {
    if (!fs::is_regular_file(p)) throw ConfigFailure("report not found: " + p);
    const std::string text = read_file(p);
    all_text += text;
    try {
      auto part = report_from_csv(text);
      records.insert(records.end(), part.begin(), part.end());
    } catch (const Error& e) {
      throw ConfigFailure(p + ": " + e.what());
    }
  }
  const auto comparisons =
      opt.comparisons.empty() ? default_comparisons(records) : read_comparisons(opt.comparisons);
  if (comparisons.empty()) throw ConfigFailure("no comparisons to evaluate");

  const fs::path dir = opt.output.empty() ? fs::path(".") : fs::path(opt.output);
  ensure_dir(dir);
  RunMetadata meta("report", fnv1a64(all_text), std::nullopt);
  std::string csv = "comparison_name,wins,ties,losses,win_ratio\n";
  try {
    for (const auto& c : comparisons) {
      const WinCount w = compare(records, c);
      csv += c.name + "," + std::to_string(w.wins) + "," + std::to_string(w.ties) + "," +
             std::to_string(w.losses) + "," + format_real(w.win_ratio) + "\n";
      out << c.name << ": win ratio " << format_real(w.win_ratio) << "\n";
    }
    write_output(dir / "win_ratio.csv", csv, meta);
    meta.write(dir, "ok");
  } catch (...) {
    meta.write(dir, "failed");
    throw;
  }
  return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block-wise recursive long-horizon forecasting toolkit", "efcast"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EFCAST_VERSION);
  Options opt;

  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Run configuration (JSON)")->required();
    sub->add_option("--output", opt.output, "Output directory (overrides output_dir)");
    sub->add_option("--seed", opt.seed, "Top-level seed (overrides the config)");
  };
  auto* train_cmd = app.add_subcommand("train", "Train a model; write checkpoint and history");
  add_config(train_cmd);

  auto* predict_cmd = app.add_subcommand("predict", "Roll a checkpoint out to horizon H");
  predict_cmd->add_option("--checkpoint", opt.checkpoint, "Checkpoint JSON")->required();
  predict_cmd->add_option("--input", opt.input, "Input CSV; its last T rows are used")->required();
  predict_cmd->add_option("--horizon,-H", opt.horizon, "Evaluation horizon H")->required();
  predict_cmd->add_option("--timestamp-column", opt.timestamp_column,
                          "Non-numeric column to skip in the input");
  predict_cmd->add_option("--output", opt.output, "Output directory");
  predict_cmd->add_flag("--trace", opt.trace, "Also write the block trace as JSON");

  auto* sweep_cmd = app.add_subcommand("sweep", "Train per (T, L) and score every (H, mode)");
  add_config(sweep_cmd);
  sweep_cmd->add_option("--stride", opt.stride, "Test window stride (overrides eval.stride)");

  auto* grad_cmd = app.add_subcommand("grad", "Segment-gradient analysis during training");
  add_config(grad_cmd);

  auto* report_cmd = app.add_subcommand("report", "Win ratios from report CSVs");
  report_cmd->add_option("--reports", opt.reports, "Report CSVs")->required();
  report_cmd->add_option("--comparisons", opt.comparisons, "Comparisons (JSON array)");
  report_cmd->add_option("--output", opt.output, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << EFCAST_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(opt, out);
    if (predict_cmd->parsed()) return cmd_predict(opt, out);
    if (sweep_cmd->parsed()) return cmd_sweep(opt, out);
    if (grad_cmd->parsed()) return cmd_grad(opt, out);
    if (report_cmd->parsed()) return cmd_report(opt, out);
  } catch (const ConfigFailure& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

} // namespace efcast
