#include "efcast/run_config.hpp"

#include "efcast/checkpoint.hpp"
#include "efcast/error.hpp"
#include "efcast/util.hpp"

#include "json.hpp"

#include <initializer_list>
#include <string_view>

namespace efcast {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(Errc::Config, what); }

void check_keys(const json& j, std::string_view section,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(std::string(section) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) fail("unknown key '" + key + "' in " + std::string(section));
  }
}

/// A number or a list of numbers.
std::vector<std::size_t> size_list(const json& j, std::string_view what) {
  std::vector<std::size_t> out;
  if (j.is_number_unsigned()) {
    out.push_back(j.get<std::size_t>());
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number_unsigned()) fail(std::string(what) + " must hold non-negative integers");
      out.push_back(v.get<std::size_t>());
    }
  } else {
    fail(std::string(what) + " must be an integer or a list of integers");
  }
  for (auto v : out)
    if (v < 1) fail(std::string(what) + " values must be >= 1");
  return out;
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(std::string("'") + key + "' has the wrong type");
  }
}

} // namespace

void RunConfig::set_seed(std::uint64_t value) {
  seed = value;
  model.seed = derive_seed(value, "init");
  train.shuffle_seed = derive_seed(value, "shuffle");
}

std::uint64_t RunConfig::hash() const noexcept {
  return fnv1a64(text) ^ splitmix64(seed);
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, "config",
             {"dataset", "split", "standardize", "model", "train", "eval", "grad", "output_dir",
              "seed"});

  RunConfig cfg;
  cfg.text = text;

  if (!doc.contains("dataset")) fail("config needs a 'dataset' section");
  const json& ds = doc.at("dataset");
  check_keys(ds, "dataset", {"path", "name", "timestamp_column", "channels"});
  if (!ds.contains("path") || !ds.at("path").is_string()) fail("dataset.path must be a string");
  cfg.dataset.path = ds.at("path").get<std::string>();
  if (cfg.dataset.path.is_relative()) cfg.dataset.path = base_dir / cfg.dataset.path;
  if (!std::filesystem::is_regular_file(cfg.dataset.path))
    fail("dataset file not found: " + cfg.dataset.path.string());
  cfg.dataset.name = get<std::string>(ds, "name", cfg.dataset.path.stem().string());
  if (ds.contains("timestamp_column"))
    cfg.dataset.schema.timestamp_column = get<std::string>(ds, "timestamp_column", {});
  cfg.dataset.schema.channels = get<std::vector<std::string>>(ds, "channels", {});

  if (doc.contains("split")) {
    const json& sp = doc.at("split");
    check_keys(sp, "split", {"ratios", "lookback_overlap"});
    if (sp.contains("ratios")) {
      const auto r = get<std::vector<unsigned>>(sp, "ratios", {});
      if (r.size() != 3) fail("split.ratios must hold three weights");
      cfg.split.train = r[0];
      cfg.split.val = r[1];
      cfg.split.test = r[2];
    }
    cfg.split.lookback_overlap = get<bool>(sp, "lookback_overlap", true);
  }
  cfg.standardize = get<bool>(doc, "standardize", true);

  if (!doc.contains("model")) fail("config needs a 'model' section");
  {
    const json& m = doc.at("model");
    check_keys(m, "model", {"kind", "T", "L", "period", "per_channel", "kernel", "hidden"});
    try {
      cfg.model = spec_from_json(m);
      validate(cfg.model);
    } catch (const Error& e) {
      fail(std::string("model: ") + e.what());
    }
  }

  if (doc.contains("train")) {
    const json& t = doc.at("train");
    check_keys(t, "train",
               {"max_epochs", "patience", "learning_rate", "batch_size", "adam_beta1",
                "adam_beta2", "adam_eps"});
    cfg.train.max_epochs = get(t, "max_epochs", cfg.train.max_epochs);
    cfg.train.patience = get(t, "patience", cfg.train.patience);
    cfg.train.learning_rate = get(t, "learning_rate", cfg.train.learning_rate);
    cfg.train.batch_size = get(t, "batch_size", cfg.train.batch_size);
    cfg.train.adam_beta1 = get(t, "adam_beta1", cfg.train.adam_beta1);
    cfg.train.adam_beta2 = get(t, "adam_beta2", cfg.train.adam_beta2);
    cfg.train.adam_eps = get(t, "adam_eps", cfg.train.adam_eps);
    try {
      validate(cfg.train);
    } catch (const Error& e) {
      fail(std::string("train: ") + e.what());
    }
  }

  if (doc.contains("eval")) {
    const json& e = doc.at("eval");
    check_keys(e, "eval", {"mode", "modes", "T", "L", "H", "stride"});
    EvalSection ev;
    const char* mode_key = e.contains("modes") ? "modes" : (e.contains("mode") ? "mode" : nullptr);
    if (mode_key) {
      const json& m = e.at(mode_key);
      ev.modes.clear();
      try {
        if (m.is_string()) {
          ev.modes.push_back(mode_from_string(m.get<std::string>()));
        } else if (m.is_array()) {
          for (const auto& v : m) ev.modes.push_back(mode_from_string(v.get<std::string>()));
        } else {
          fail("eval.modes must be a string or a list of strings");
        }
      } catch (const json::exception&) {
        fail("eval.modes must hold strings");
      }
      if (ev.modes.empty()) fail("eval.modes is empty");
    }
    ev.input_lengths = e.contains("T") ? size_list(e.at("T"), "eval.T")
                                       : std::vector<std::size_t>{cfg.model.input_length};
    ev.output_lengths = e.contains("L") ? size_list(e.at("L"), "eval.L")
                                        : std::vector<std::size_t>{cfg.model.output_length};
    if (!e.contains("H")) fail("eval.H must list at least one horizon");
    ev.horizons = size_list(e.at("H"), "eval.H");
    if (ev.horizons.empty()) fail("eval.H must list at least one horizon");
    ev.stride = get<std::size_t>(e, "stride", 1);
    if (ev.stride < 1) fail("eval.stride must be >= 1");
    cfg.eval = std::move(ev);
  }

  if (doc.contains("grad")) {
    const json& g = doc.at("grad");
    check_keys(g, "grad", {"enabled", "boundaries"});
    cfg.grad.enabled = get<bool>(g, "enabled", false);
    cfg.grad.boundaries = get<std::vector<std::size_t>>(g, "boundaries", {});
  }

  const std::filesystem::path out = get<std::string>(doc, "output_dir", "out");
  cfg.output_dir = out.is_relative() ? base_dir / out : out;
  cfg.set_seed(get<std::uint64_t>(doc, "seed", 0));
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) fail("config file not found: " + path.string());
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_run_config(read_file(path), dir);
}

} // namespace efcast
