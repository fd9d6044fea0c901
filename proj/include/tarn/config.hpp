// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarn/data.hpp"
#include "tarn/episodic.hpp"
#include "tarn/model.hpp"

namespace tarn {

/// Everything one CLI invocation needs, parsed from a single JSON document.
struct RunConfig {
  ModelConfig model;
  EpisodeSpec train_episode;
  EpisodeSpec eval_episode;
  TrainConfig train;

  /// Either a TSF path or an inline synthetic spec.
  std::optional<std::filesystem::path> data_path;
  std::optional<SyntheticSpec> synthetic;

  // Class partition. Explicit lists win over fractions.
  std::vector<std::uint32_t> train_classes;
  std::vector<std::uint32_t> val_classes;
  std::vector<std::uint32_t> test_classes;
  double train_fraction = 0.6;
  double val_fraction = 0.2;

  std::filesystem::path output_dir = "runs/default";
  std::uint64_t seed = 0;
};

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticSpec& spec);

/// Applies `key.path=value` overrides; the value is parsed as JSON when
/// possible and kept as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Mode defaults (TrainConfig::fsl_defaults / zsl_defaults) overlaid with the
/// document. Throws SpecError on invalid or inconsistent settings.
RunConfig run_config_from_json(const nlohmann::json& doc);

nlohmann::json read_json_file(const std::filesystem::path& path);

/// Dataset named by the config (loaded or generated).
Dataset materialize_dataset(const RunConfig& config);

/// Fills the train/val/test pools of a task from the config and dataset.
TaskSetup make_task(const RunConfig& config, const Dataset& dataset);

}  // namespace tarn
