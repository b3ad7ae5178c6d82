#include "efcast/evaluation.hpp"

#include "efcast/error.hpp"
#include "efcast/rollout.hpp"
#include "efcast/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace efcast {

namespace {
constexpr std::size_t kChunk = 256;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
} // namespace

std::string_view to_string(Mode mode) noexcept { return mode == Mode::DF ? "DF" : "EF"; }

Mode mode_from_string(std::string_view name) {
  if (name == "DF" || name == "df") return Mode::DF;
  if (name == "EF" || name == "ef") return Mode::EF;
  throw Error(Errc::Config, "unknown mode '" + std::string(name) + "'");
}

namespace {

Matrix forecast_columns(const Forecaster& model, const Matrix& x, Mode mode, std::size_t horizon) {
  if (mode == Mode::EF) return rollout_columns(model, x, horizon);
  Matrix out = model.forward(x).topRows(static_cast<Eigen::Index>(horizon));
  if (!out.allFinite())
    throw NonFiniteBlockError(1, RolloutTrace{{model.spec().input_length,
                                               model.spec().output_length, horizon},
                                              {}, {}, {}, {}});
  return out;
}

void accumulate(ErrorSums& sums, const Matrix& pred, const Matrix& y) {
  const auto diff = (pred - y).array();
  sums.squared += diff.square().sum();
  sums.absolute += diff.abs().sum();
  sums.count += static_cast<std::size_t>(y.size());
}

void check_mode(Mode mode, std::size_t output_length, std::size_t horizon) {
  if (horizon < 1) throw Error(Errc::InvalidSpec, "horizon must be >= 1");
  if (mode == Mode::DF && output_length < horizon)
    throw Error(Errc::ModeMismatch, "DF needs L >= H (L = " + std::to_string(output_length) +
                                        ", H = " + std::to_string(horizon) + ")");
}

} // namespace

ErrorSums evaluate_samples(const Forecaster& model, std::span<const WindowSample> samples,
                           Mode mode, std::size_t horizon) {
  check_mode(mode, model.spec().output_length, horizon);
  ErrorSums sums;
  Matrix x, y;
  for (std::size_t first = 0; first < samples.size(); first += kChunk) {
    const auto chunk = samples.subspan(first, std::min(kChunk, samples.size() - first));
    gather_columns(chunk, x, y);
    if (static_cast<std::size_t>(y.rows()) != horizon)
      throw Error(Errc::ShapeMismatch, "sample targets must have H rows");
    accumulate(sums, forecast_columns(model, x, mode, horizon), y);
  }
  return sums;
}

EvalRecord evaluate(const Forecaster& model, const SeriesFrame& test_frame, const EvalConfig& cfg,
                    std::string model_id, std::string dataset_id) {
  const auto& spec = model.spec();
  if (cfg.input_length != spec.input_length || cfg.output_length != spec.output_length)
    throw Error(Errc::ShapeMismatch, "evaluation T/L differ from the model's");
  if (test_frame.n_channels() != spec.channels)
    throw Error(Errc::ShapeMismatch, "test frame channel count does not match the model");
  if (cfg.stride < 1) throw Error(Errc::InvalidSpec, "stride must be >= 1");
  check_mode(cfg.mode, cfg.output_length, cfg.horizon);

  const SeriesFrame trimmed = test_frame.trimmed_for(cfg.input_length);
  const auto windows = iter_windows(trimmed, cfg.input_length, cfg.horizon, cfg.stride);
  if (windows.empty())
    throw Error(Errc::NoTestWindows, "no (T = " + std::to_string(cfg.input_length) +
                                         ", H = " + std::to_string(cfg.horizon) +
                                         ") test window");

  ErrorSums sums;
  std::vector<std::size_t> idx;
  Matrix x, y;
  for (std::size_t first = 0; first < windows.size(); first += kChunk) {
    idx.resize(std::min(kChunk, windows.size() - first));
    std::iota(idx.begin(), idx.end(), first);
    gather_columns(windows, idx, x, y);
    accumulate(sums, forecast_columns(model, x, cfg.mode, cfg.horizon), y);
  }

  EvalRecord r;
  r.model = std::move(model_id);
  r.dataset = std::move(dataset_id);
  r.input_length = cfg.input_length;
  r.output_length = cfg.output_length;
  r.horizon = cfg.horizon;
  r.mode = cfg.mode;
  r.mse = sums.mse();
  r.mae = sums.mae();
  r.n_windows = windows.size();
  return r;
}

namespace {

EvalRecord failed_record(const std::string& model, const std::string& dataset, std::size_t t,
                         std::size_t l, std::size_t h, Mode mode, std::string_view why) {
  EvalRecord r;
  r.model = model;
  r.dataset = dataset;
  r.input_length = t;
  r.output_length = l;
  r.horizon = h;
  r.mode = mode;
  r.mse = r.mae = kNaN;
  r.status = std::string(why);
  return r;
}

std::string_view status_of(const Error& e) {
  switch (e.code()) {
  case Errc::ModeMismatch: return status::mode_mismatch;
  case Errc::NoTestWindows:
  case Errc::HorizonExceedsData: return status::horizon_exceeds_data;
  case Errc::NonFiniteBlock: return status::non_finite_block;
  default: return status::train_failed;
  }
}

template <class T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

void sort_records(std::vector<EvalRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    return std::tie(a.input_length, a.output_length, a.horizon, a.mode) <
           std::tie(b.input_length, b.output_length, b.horizon, b.mode);
  });
}

} // namespace

SweepResult sweep(const TrainRecipe& recipe, const SeriesFrame& dataset, const SweepGrid& grid,
                  const SweepOptions& options) {
  const auto ts = sorted_unique(grid.input_lengths);
  const auto ls = sorted_unique(grid.output_lengths);
  const auto hs = sorted_unique(grid.horizons);
  const auto modes = sorted_unique(grid.modes);
  if (ts.empty() || ls.empty() || hs.empty() || modes.empty())
    throw Error(Errc::InvalidSpec, "sweep grid needs at least one T, L, H and mode");
  if (ts.front() < 1 || ls.front() < 1 || hs.front() < 1 || grid.stride < 1)
    throw Error(Errc::InvalidSpec, "sweep grid values must be >= 1");

  const SplitFrames split = chronological_split(dataset, options.split, ts.back());
  SeriesFrame train_frame = split.train, val_frame = split.val, test_frame = split.test;
  if (options.standardize) {
    const auto stats = fit_standardize(split.train);
    train_frame = apply_standardize(split.train, stats);
    val_frame = apply_standardize(split.val, stats);
    test_frame = apply_standardize(split.test, stats);
  }

  SweepResult result;
  for (std::size_t t : ts)
    for (std::size_t l : ls) {
      SweepRun run;
      run.run_id = result.runs.size() + 1;
      run.input_length = t;
      run.output_length = l;

      ForecasterSpec spec = recipe.model;
      spec.input_length = t;
      spec.output_length = l;
      spec.channels = dataset.n_channels();
      std::unique_ptr<Forecaster> model;
      try {
        model = build(spec);
        run.history = train(*model, train_frame, val_frame, recipe.train);
      } catch (const Error& e) {
        model.reset();
        run.status = std::string(status::train_failed);
        run.message = e.what();
      }

      for (std::size_t h : hs)
        for (Mode mode : modes) {
          EvalRecord r;
          if (mode == Mode::DF && l < h) {
            r = failed_record(options.model_id, options.dataset_id, t, l, h, mode,
                              status::mode_mismatch);
          } else if (!model) {
            r = failed_record(options.model_id, options.dataset_id, t, l, h, mode,
                              status::train_failed);
          } else {
            try {
              r = evaluate(*model, test_frame, {mode, t, l, h, grid.stride}, options.model_id,
                           options.dataset_id);
            } catch (const Error& e) {
              r = failed_record(options.model_id, options.dataset_id, t, l, h, mode,
                                status_of(e));
            }
          }
          r.run_id = run.run_id;
          result.records.push_back(std::move(r));
        }
      result.runs.push_back(std::move(run));
      if (options.on_run) {
        SweepResult partial = result;
        sort_records(partial.records);
        options.on_run(partial);
      }
    }
  sort_records(result.records);
  return result;
}

bool RecordSelector::matches(const EvalRecord& r) const {
  if (mode && r.mode != *mode) return false;
  if (model && r.model != *model) return false;
  if (input_length && r.input_length != *input_length) return false;
  if (output_length && r.output_length != *output_length) return false;
  if (output_equals_horizon && r.output_length != r.horizon) return false;
  return true;
}

WinCount compare(std::span<const EvalRecord> records, const WinComparison& cmp) {
  using Key = std::tuple<std::string, std::string, std::size_t, std::size_t>;
  const auto key = [&](const EvalRecord& r) {
    return Key{r.model, r.dataset, cmp.match_input_length ? r.input_length : 0, r.horizon};
  };
  const auto describe = [](const Key& k) {
    return "(model " + std::get<0>(k) + ", dataset " + std::get<1>(k) + ", T " +
           std::to_string(std::get<2>(k)) + ", H " + std::to_string(std::get<3>(k)) + ")";
  };

  std::map<Key, std::vector<const EvalRecord*>> left, right;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    if (cmp.left.matches(r)) left[key(r)].push_back(&r);
    if (cmp.right.matches(r)) right[key(r)].push_back(&r);
  }
  std::set<Key> keys;
  for (const auto& [k, v] : left) keys.insert(k);
  for (const auto& [k, v] : right) keys.insert(k);
  if (keys.empty()) throw Error(Errc::UnmatchedCell, "comparison '" + cmp.name + "' selects nothing");

  WinCount out;
  for (const auto& k : keys) {
    const auto l = left.find(k), r = right.find(k);
    if (l == left.end() || r == right.end())
      throw Error(Errc::UnmatchedCell, "cell " + describe(k) + " lacks a " +
                                           (l == left.end() ? "left" : "right") + " record");
    if (l->second.size() != 1 || r->second.size() != 1)
      throw Error(Errc::UnmatchedCell, "cell " + describe(k) + " matches several records");
    const EvalRecord& a = *l->second.front();
    const EvalRecord& b = *r->second.front();
    for (const auto& [x, y] : {std::pair{a.mse, b.mse}, std::pair{a.mae, b.mae}}) {
      if (x < y)
        ++out.wins;
      else if (x == y)
        ++out.ties;
      else
        ++out.losses;
    }
  }
  const std::size_t favourable = out.wins + (cmp.left_wins_ties ? out.ties : 0);
  const std::size_t total = out.wins + out.losses + (cmp.left_wins_ties ? out.ties : 0);
  out.win_ratio = total == 0 ? kNaN : static_cast<double>(favourable) / static_cast<double>(total);
  return out;
}

double win_ratio(std::span<const EvalRecord> records, const WinComparison& comparison) {
  return compare(records, comparison).win_ratio;
}

std::vector<EvalRecord> extreme_horizon_eval(const Forecaster& model, const SeriesFrame& test_frame,
                                             std::size_t input_length,
                                             const std::vector<std::size_t>& horizons,
                                             std::size_t stride) {
  if (horizons.empty()) throw Error(Errc::InvalidSpec, "no horizons given");
  if (!std::is_sorted(horizons.begin(), horizons.end()) || horizons.front() < 1 ||
      std::adjacent_find(horizons.begin(), horizons.end()) != horizons.end())
    throw Error(Errc::InvalidSpec, "horizons must be strictly increasing and >= 1");
  const std::size_t n = test_frame.trimmed_for(input_length).n_steps();
  if (window_count(n, input_length, horizons.back()) == 0)
    throw Error(Errc::HorizonExceedsData,
                "H = " + std::to_string(horizons.back()) + " leaves no test window of " +
                    std::to_string(n) + " rows");

  const auto& spec = model.spec();
  std::vector<EvalRecord> out;
  for (std::size_t h : horizons) {
    try {
      out.push_back(
          evaluate(model, test_frame, {Mode::EF, input_length, spec.output_length, h, stride}));
    } catch (const NonFiniteBlockError&) {
      out.push_back(
          failed_record({}, {}, input_length, spec.output_length, h, Mode::EF,
                        status::non_finite_block));
    }
  }
  return out;
}

std::string report_to_csv(std::span<const EvalRecord> records) {
  std::string out = "model,dataset,T,L,H,mode,mse,mae,n_windows,status\n";
  for (const auto& r : records)
    out += r.model + "," + r.dataset + "," + std::to_string(r.input_length) + "," +
           std::to_string(r.output_length) + "," + std::to_string(r.horizon) + "," +
           std::string(to_string(r.mode)) + "," + format_real(r.mse) + "," + format_real(r.mae) +
           "," + std::to_string(r.n_windows) + "," + r.status + "\n";
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& s, std::size_t line) {
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw Error(Errc::Config, "report line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

} // namespace

std::vector<EvalRecord> report_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::EmptyFile, "empty report");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "model,dataset,T,L,H,mode,mse,mae,n_windows,status")
    throw Error(Errc::Config, "unexpected report header '" + line + "'");

  std::vector<EvalRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 10)
      throw Error(Errc::Config, "report line " + std::to_string(line_no) + " has " +
                                    std::to_string(f.size()) + " fields");
    EvalRecord r;
    r.model = f[0];
    r.dataset = f[1];
    r.input_length = parse_number<std::size_t>(f[2], line_no);
    r.output_length = parse_number<std::size_t>(f[3], line_no);
    r.horizon = parse_number<std::size_t>(f[4], line_no);
    r.mode = mode_from_string(f[5]);
    r.mse = parse_number<double>(f[6], line_no);
    r.mae = parse_number<double>(f[7], line_no);
    r.n_windows = parse_number<std::size_t>(f[8], line_no);
    r.status = f[9];
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace efcast
