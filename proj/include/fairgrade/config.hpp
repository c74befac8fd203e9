#pragma once

#include <map>
#include <optional>
#include <string>

#include "fairgrade/synth.hpp"
#include "fairgrade/trainer.hpp"

namespace fairgrade {

// Parsed run configuration. Sample-weighting parameters arrive keyed by
// group name and are resolved to race indices once the dataset is loaded.
struct RunConfig {
  std::optional<std::string> data_dir;
  std::optional<SynthConfig> synth;
  DatasetOptions dataset_options;

  TrainConfig train;
  StrategyConfig strategy;
  std::map<std::string, double> graduation_rates_by_name;
  std::map<std::string, double> group_proportions_by_name;

  char cutoff = 'A';
  std::vector<std::string> include_groups;  // empty = all except Decline-to-State
  std::string out_path;

  // Loads the dataset (from dir or synthesizer) and resolves the
  // name-keyed weighting maps into the strategy config.
  CohortDataset load_dataset() const;
  StrategyConfig resolved_strategy(const CohortDataset& dataset) const;
  std::vector<std::string> excluded_groups(const CohortDataset& dataset) const;
};

// Parses and schema-validates the JSON run config; unknown keys are
// rejected with their path.
RunConfig parse_run_config_file(const std::string& path);
RunConfig parse_run_config_text(const std::string& text);

}  // namespace fairgrade
