#include "efcast/checkpoint.hpp"

#include "efcast/error.hpp"
#include "efcast/util.hpp"

namespace efcast {

using nlohmann::json;

json spec_to_json(const ForecasterSpec& spec) {
  return json{{"kind", std::string(to_string(spec.kind))},
              {"T", spec.input_length},
              {"L", spec.output_length},
              {"C", spec.channels},
              {"period", spec.period},
              {"per_channel", spec.per_channel},
              {"kernel", spec.kernel},
              {"hidden", spec.hidden},
              {"seed", spec.seed}};
}

ForecasterSpec spec_from_json(const json& j, ForecasterSpec base) {
  if (!j.is_object()) throw Error(Errc::InvalidSpec, "model spec must be a JSON object");
  try {
    if (j.contains("kind")) base.kind = model_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("T")) base.input_length = j.at("T").get<std::size_t>();
    if (j.contains("L")) base.output_length = j.at("L").get<std::size_t>();
    if (j.contains("C")) base.channels = j.at("C").get<std::size_t>();
    if (j.contains("period")) base.period = j.at("period").get<std::size_t>();
    if (j.contains("per_channel")) base.per_channel = j.at("per_channel").get<bool>();
    if (j.contains("kernel")) base.kernel = j.at("kernel").get<std::size_t>();
    if (j.contains("hidden")) base.hidden = j.at("hidden").get<std::size_t>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidSpec, e.what());
  }
  return base;
}

Checkpoint make_checkpoint(const Forecaster& model, std::vector<std::string> channel_names,
                           std::optional<StandardizeStats> standardize) {
  return Checkpoint{model.spec(), model.get_params().values, std::move(channel_names),
                    std::move(standardize)};
}

std::unique_ptr<Forecaster> restore(const Checkpoint& checkpoint) {
  auto model = build(checkpoint.spec);
  model->set_params(checkpoint.params);
  return model;
}

namespace {
json to_array(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector from_array(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}
} // namespace

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  json j;
  j["spec"] = spec_to_json(checkpoint.spec);
  j["param_values"] = to_array(checkpoint.params);
  if (!checkpoint.channel_names.empty()) j["channel_names"] = checkpoint.channel_names;
  if (checkpoint.standardize)
    j["standardize"] = {{"mean", to_array(checkpoint.standardize->mean)},
                        {"std", to_array(checkpoint.standardize->std)}};
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    Checkpoint c;
    c.spec = spec_from_json(j.at("spec"));
    validate(c.spec);
    c.params = from_array(j.at("param_values"));
    if (j.contains("channel_names"))
      c.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    if (j.contains("standardize"))
      c.standardize = StandardizeStats{from_array(j.at("standardize").at("mean")),
                                       from_array(j.at("standardize").at("std"))};
    return c;
  } catch (const json::exception& e) {
    throw Error(Errc::Config, std::string("malformed checkpoint: ") + e.what());
  } catch (const Error& e) {
    throw Error(Errc::Config, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, checkpoint_to_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_file(path));
}

} // namespace efcast
