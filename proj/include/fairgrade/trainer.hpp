#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairgrade/cohort.hpp"
#include "fairgrade/losses.hpp"
#include "fairgrade/seqnet.hpp"

namespace fairgrade {

enum class StrategyId {
  Default,
  GradeLabelWeighted,
  Alone,
  GradRateWgh,
  EqualWgh,
  RaceFeature,
  Multi,
  Adversarial,
  InferRmv,
};

StrategyId strategy_id_from_string(const std::string& s);
std::string to_string(StrategyId id);
std::vector<std::string> strategy_id_names();

struct StrategyConfig {
  StrategyId id = StrategyId::Default;
  std::string alone_group;  // required for Alone
  LabelWeightScheme label_weighting;
  SampleWeightScheme sample_weighting;
  FeatureMode feature_mode = FeatureMode::None;
  double alpha = 0.0;
  RunMode inference_mode = RunMode::InferFull;
  // Naive single-objective reading of the combined adversarial loss: the
  // race head descends the negated adversarial term instead of plain
  // cross-entropy. Off by default (gradient-reversal training).
  bool literal_eq6 = false;

  // Fills the sub-fields the strategy id dictates. Graduation rates are
  // keyed by race index and only needed for GradRateWgh; Equal derives
  // group proportions from the training enrollments.
  static StrategyConfig from_id(StrategyId id,
                                const std::map<int, double>& graduation_rates = {},
                                const std::string& alone_group = {},
                                double alpha = 0.1);
  void validate() const;
};

struct TrainConfig {
  std::uint64_t seed = 1;
  int hidden = 64;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_epochs = 50;
  int patience = 5;
  // Grade-label weighting is applied to every strategy unless switched
  // off; the bare unweighted baseline is Default with this flag false.
  bool apply_label_weighting_everywhere = true;

  void validate() const;
};

struct Checkpoint {
  ModelParams params;
  LetterScale scale;
  std::vector<std::string> group_list;
  FeatureSpec features;
  std::string strategy_id;
  std::string inference_mode = "infer_full";
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

struct PredictionRecord {
  std::string student_id;
  int race_index = 0;
  int term = 0;
  int course = 0;
  GradeLabel actual;
  Eigen::VectorXd letter_probs;   // length m, sums to 1
  Eigen::VectorXd pass_np_probs;  // length 2, sums to 1
};

struct PredictionSet {
  std::vector<PredictionRecord> records;
};

TrainResult train(const CohortDataset& dataset, const SplitSpec& split,
                  const StrategyConfig& strategy, const TrainConfig& config);

PredictionSet evaluate(const Checkpoint& checkpoint, const CohortDataset& dataset,
                       const SplitSpec& split, RunMode inference_mode);

struct StrategyOutcome {
  std::optional<TrainResult> result;
  PredictionSet predictions;
  std::string error;  // non-empty when the strategy failed

  bool ok() const { return error.empty(); }
};

// Trains and evaluates each strategy on the same split; a failure in one
// strategy does not abort the others.
std::map<std::string, StrategyOutcome> run_matrix(
    const CohortDataset& dataset, const SplitSpec& split,
    const std::vector<StrategyConfig>& strategies, const TrainConfig& config);

}  // namespace fairgrade
