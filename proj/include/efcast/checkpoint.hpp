#pragma once

#include "efcast/forecaster.hpp"

#include "json.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace efcast {

/// On-disk model: {"spec": {...}, "param_values": [...]} plus optional
/// channel names and the standardization the model was trained under.
/// Doubles are written in shortest round-trip decimal form, so a load
/// reproduces the parameters bit for bit.
struct Checkpoint {
  ForecasterSpec spec;
  Vector params;
  std::vector<std::string> channel_names;
  std::optional<StandardizeStats> standardize;
};

Checkpoint make_checkpoint(const Forecaster& model, std::vector<std::string> channel_names = {},
                           std::optional<StandardizeStats> standardize = std::nullopt);
std::unique_ptr<Forecaster> restore(const Checkpoint& checkpoint);

std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json spec_to_json(const ForecasterSpec& spec);
/// Missing keys keep the values already in `base`.
ForecasterSpec spec_from_json(const nlohmann::json& j, ForecasterSpec base = {});

} // namespace efcast
