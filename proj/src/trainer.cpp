#include "fairgrade/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "fairgrade/errors.hpp"
#include "fairgrade/log.hpp"
#include "fairgrade/rng.hpp"

namespace fairgrade {

using nlohmann::json;

StrategyId strategy_id_from_string(const std::string& s) {
  if (s == "default") return StrategyId::Default;
  if (s == "grade_label_weighted") return StrategyId::GradeLabelWeighted;
  if (s == "alone") return StrategyId::Alone;
  if (s == "grad_rate_wgh") return StrategyId::GradRateWgh;
  if (s == "equal_wgh") return StrategyId::EqualWgh;
  if (s == "race_feature") return StrategyId::RaceFeature;
  if (s == "multi") return StrategyId::Multi;
  if (s == "adversarial") return StrategyId::Adversarial;
  if (s == "infer_rmv") return StrategyId::InferRmv;
  throw ValidationError("unknown strategy id '" + s + "'");
}

std::string to_string(StrategyId id) {
  switch (id) {
    case StrategyId::Default: return "default";
    case StrategyId::GradeLabelWeighted: return "grade_label_weighted";
    case StrategyId::Alone: return "alone";
    case StrategyId::GradRateWgh: return "grad_rate_wgh";
    case StrategyId::EqualWgh: return "equal_wgh";
    case StrategyId::RaceFeature: return "race_feature";
    case StrategyId::Multi: return "multi";
    case StrategyId::Adversarial: return "adversarial";
    case StrategyId::InferRmv: return "infer_rmv";
  }
  return "?";
}

std::vector<std::string> strategy_id_names() {
  return {"default", "grade_label_weighted", "alone", "grad_rate_wgh", "equal_wgh",
          "race_feature", "multi", "adversarial", "infer_rmv"};
}

StrategyConfig StrategyConfig::from_id(StrategyId id,
                                       const std::map<int, double>& graduation_rates,
                                       const std::string& alone_group, double alpha) {
  StrategyConfig c;
  c.id = id;
  switch (id) {
    case StrategyId::Default:
      break;
    case StrategyId::GradeLabelWeighted:
      c.label_weighting.mode = LabelWeightScheme::Mode::MinibatchInverse;
      break;
    case StrategyId::Alone:
      c.alone_group = alone_group;
      break;
    case StrategyId::GradRateWgh:
      c.sample_weighting.mode = SampleWeightScheme::Mode::GradRate;
      c.sample_weighting.graduation_rates = graduation_rates;
      break;
    case StrategyId::EqualWgh:
      c.sample_weighting.mode = SampleWeightScheme::Mode::Equal;
      break;
    case StrategyId::RaceFeature:
      c.feature_mode = FeatureMode::Race;
      break;
    case StrategyId::Multi:
      c.feature_mode = FeatureMode::Multi;
      break;
    case StrategyId::Adversarial:
      c.alpha = alpha;
      break;
    case StrategyId::InferRmv:
      c.feature_mode = FeatureMode::Race;
      c.inference_mode = RunMode::InferRmv;
      break;
  }
  return c;
}

void StrategyConfig::validate() const {
  if (alpha < 0.0) throw ValidationError("alpha must be non-negative");
  if (id == StrategyId::Alone && alone_group.empty())
    throw ValidationError("alone strategy requires a group name");
  if (id == StrategyId::Adversarial && alpha < 0.0)
    throw ValidationError("adversarial strategy requires alpha >= 0");
  if (id == StrategyId::InferRmv &&
      (feature_mode == FeatureMode::None || inference_mode != RunMode::InferRmv))
    throw ValidationError("infer_rmv requires a feature mode and infer_rmv inference");
  if (id == StrategyId::GradRateWgh &&
      sample_weighting.mode != SampleWeightScheme::Mode::GradRate)
    throw ValidationError("grad_rate_wgh requires grad-rate sample weighting");
  if (id == StrategyId::EqualWgh &&
      sample_weighting.mode != SampleWeightScheme::Mode::Equal)
    throw ValidationError("equal_wgh requires equal sample weighting");
}

void TrainConfig::validate() const {
  if (hidden <= 0 || batch_size <= 0 || max_epochs <= 0 || patience < 0)
    throw ValidationError("train config: sizes must be positive");
  if (learning_rate <= 0.0 || beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 ||
      beta2 >= 1.0 || epsilon <= 0.0)
    throw ValidationError("train config: bad optimizer hyperparameters");
}

namespace {

class Adam {
 public:
  Adam(Eigen::Index n, double lr, double b1, double b2, double eps)
      : lr_(lr), b1_(b1), b2_(b2), eps_(eps),
        m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(ModelParams& params, const ParamGrads& grads) {
    ++t_;
    const Eigen::VectorXd g = grads.flatten();
    m_ = b1_ * m_ + (1.0 - b1_) * g;
    v_ = b2_ * v_ + (1.0 - b2_) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(b1_, t_);
    const double bc2 = 1.0 - std::pow(b2_, t_);
    Eigen::VectorXd theta = params.flatten();
    theta -= (lr_ / bc1) * m_.cwiseQuotient(
                  ((v_ / bc2).cwiseSqrt().array() + eps_).matrix());
    params.unflatten(theta);
  }

 private:
  double lr_, b1_, b2_, eps_;
  int t_ = 0;
  Eigen::VectorXd m_, v_;
};

std::vector<TargetRef> targets_in_terms(const Batch& batch, const std::set<int>& terms) {
  std::vector<TargetRef> out;
  for (auto& t : batch.targets())
    if (terms.count(t.term)) out.push_back(t);
  return out;
}

double mean_masked_ce(const ModelParams& params,
                      const std::vector<Batch>& batches,
                      const std::set<int>& terms, RunMode mode) {
  double loss = 0.0;
  std::int64_t count = 0;
  for (const auto& batch : batches) {
    ForwardTrace trace = forward(params, batch, mode);
    const auto targets = targets_in_terms(batch, terms);
    loss += masked_ce(trace, targets).loss;
    count += static_cast<std::int64_t>(targets.size());
  }
  return count > 0 ? loss / static_cast<double>(count) : 0.0;
}

}  // namespace

TrainResult train(const CohortDataset& dataset, const SplitSpec& split,
                  const StrategyConfig& strategy, const TrainConfig& config) {
  strategy.validate();
  config.validate();
  if (split.train_terms.empty() || split.val_terms.empty())
    throw ValidationError("train: split must declare train and validation terms");

  const int train_limit = *split.train_terms.rbegin() + 1;
  const int val_limit = *split.val_terms.rbegin() + 1;
  const FeatureSpec features = FeatureSpec::build(dataset, strategy.feature_mode);

  int alone_race = -1;
  if (strategy.id == StrategyId::Alone) {
    auto it = std::find(dataset.group_list.begin(), dataset.group_list.end(),
                        strategy.alone_group);
    if (it == dataset.group_list.end())
      throw ValidationError("alone strategy: group '" + strategy.alone_group +
                            "' not in the dataset group list");
    alone_race = static_cast<int>(it - dataset.group_list.begin());
  }

  auto count_targets = [&](const EncodedSequence& seq, const std::set<int>& terms) {
    std::int64_t n = 0;
    for (const auto& step : seq.steps)
      if (terms.count(step.target_term)) n += static_cast<std::int64_t>(step.targets.size());
    return n;
  };

  std::vector<EncodedSequence> train_seqs, val_seqs;
  std::vector<int> train_races;
  std::vector<std::int64_t> train_counts;
  for (const auto& student : dataset.students) {
    if (alone_race >= 0 && student.race_index != alone_race) continue;
    EncodedSequence seq = encode_student(student, dataset, features, train_limit);
    const std::int64_t n = count_targets(seq, split.train_terms);
    if (n > 0) {
      train_races.push_back(seq.race_index);
      train_counts.push_back(n);
      train_seqs.push_back(std::move(seq));
    }
  }
  if (train_seqs.empty())
    throw ValidationError(strategy.id == StrategyId::Alone
                              ? "alone strategy: no training students in group '" +
                                    strategy.alone_group + "'"
                              : "train: no students with training-term targets");

  for (const auto& student : dataset.students) {
    EncodedSequence seq = encode_student(student, dataset, features, val_limit);
    if (count_targets(seq, split.val_terms) > 0) val_seqs.push_back(std::move(seq));
  }

  // Sample weights; equal weighting defaults to empirical enrollment shares.
  SampleWeightScheme weighting = strategy.sample_weighting;
  if (weighting.mode == SampleWeightScheme::Mode::Equal &&
      weighting.group_proportions.empty()) {
    std::map<int, std::int64_t> per_race;
    std::int64_t total = 0;
    for (std::size_t s = 0; s < train_races.size(); ++s) {
      per_race[train_races[s]] += train_counts[s];
      total += train_counts[s];
    }
    for (const auto& [race, count] : per_race)
      weighting.group_proportions[race] =
          static_cast<double>(count) / static_cast<double>(total);
  }
  const std::vector<double> lambda = sample_weights(train_races, train_counts, weighting);

  LabelWeightScheme label_scheme = strategy.label_weighting;
  if (config.apply_label_weighting_everywhere ||
      strategy.id == StrategyId::GradeLabelWeighted)
    label_scheme.mode = LabelWeightScheme::Mode::MinibatchInverse;

  ModelDims dims;
  dims.course_count = dataset.course_count();
  dims.letter_count = dataset.scale.size();
  dims.feature_dim = features.dim();
  dims.hidden = config.hidden;
  dims.race_classes = static_cast<int>(dataset.group_list.size());

  ModelParams params = init_params(dims, config.seed);
  Adam adam(params.parameter_count(), config.learning_rate, config.beta1, config.beta2,
            config.epsilon);

  const bool adversarial = strategy.id == StrategyId::Adversarial;
  const std::vector<Batch> val_batches = make_batches(val_seqs, config.batch_size);

  TrainResult result;
  ModelParams best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stall = 0;

  std::vector<int> order(train_seqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const Rng base(config.seed);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    // Per-epoch shuffle stream derived from (seed, epoch).
    Rng rng = base.derive(1000 + static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);

    std::vector<const EncodedSequence*> permuted;
    permuted.reserve(order.size());
    for (int i : order) permuted.push_back(&train_seqs[i]);
    const std::vector<Batch> batches = make_batches(permuted, config.batch_size);

    double epoch_loss = 0.0;
    std::int64_t epoch_targets = 0;
    for (std::size_t batch_index = 0; batch_index < batches.size(); ++batch_index) {
      const Batch& batch = batches[batch_index];
      ForwardTrace trace = forward(params, batch, RunMode::Train);
      const auto targets = targets_in_terms(batch, split.train_terms);
      const auto sigma = label_weights(targets, dims, label_scheme);

      std::vector<double> batch_lambda(batch.size());
      std::vector<int> batch_races(batch.size());
      for (int b = 0; b < batch.size(); ++b) {
        batch_lambda[b] =
            lambda[order[batch_index * static_cast<std::size_t>(config.batch_size) + b]];
        batch_races[b] = batch.sequences[b]->race_index;
      }

      const GradeLossResult grade = combined_loss(trace, targets, sigma, batch_lambda);
      if (!std::isfinite(grade.loss))
        throw InternalError("training diverged at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));

      std::vector<Eigen::MatrixXd> race_grads;
      if (adversarial) {
        RaceLossResult race = adversarial_loss(trace, batch_races);
        race_grads = std::move(race.d_logits);
      }
      ParamGrads grads =
          backward(params, trace, grade.d_logits, race_grads, strategy.alpha);
      if (adversarial && strategy.literal_eq6) {
        grads.w_race *= -strategy.alpha;
        grads.b_race *= -strategy.alpha;
      }
      adam.step(params, grads);

      epoch_loss += grade.loss;
      epoch_targets += static_cast<std::int64_t>(targets.size());
    }

    const double train_loss =
        epoch_targets > 0 ? epoch_loss / static_cast<double>(epoch_targets) : 0.0;
    const double val_loss =
        mean_masked_ce(params, val_batches, split.val_terms, RunMode::Train);
    result.history.push_back({epoch, train_loss, val_loss});
    log::debug("epoch " + std::to_string(epoch) + " train " + std::to_string(train_loss) +
               " val " + std::to_string(val_loss));

    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = params;
      best_epoch = epoch;
      stall = 0;
    } else if (++stall > config.patience) {
      break;
    }
  }

  result.checkpoint.params = std::move(best_params);
  result.checkpoint.scale = dataset.scale;
  result.checkpoint.group_list = dataset.group_list;
  result.checkpoint.features = features;
  result.checkpoint.strategy_id = to_string(strategy.id);
  result.checkpoint.inference_mode = to_string(strategy.inference_mode);
  result.checkpoint.alpha = strategy.alpha;
  result.checkpoint.seed = config.seed;
  result.best_epoch = best_epoch;
  result.best_val_loss = best_val;
  return result;
}

PredictionSet evaluate(const Checkpoint& checkpoint, const CohortDataset& dataset,
                       const SplitSpec& split, RunMode inference_mode) {
  const ModelDims& dims = checkpoint.params.dims;
  if (dims.course_count != dataset.course_count() ||
      dims.letter_count != dataset.scale.size() ||
      dims.race_classes != static_cast<int>(dataset.group_list.size()))
    throw ValidationError("evaluate: checkpoint dimensions do not match the dataset");

  const int limit = split.test_terms.empty() ? dataset.term_count
                                             : *split.test_terms.rbegin() + 1;
  std::vector<EncodedSequence> seqs;
  for (const auto& student : dataset.students) {
    EncodedSequence seq = encode_student(student, dataset, checkpoint.features, limit);
    bool any = false;
    for (const auto& step : seq.steps)
      if (split.test_terms.count(step.target_term) && !step.targets.empty()) any = true;
    if (any) seqs.push_back(std::move(seq));
  }

  PredictionSet out;
  const int lw = dims.label_width();
  const auto batches = make_batches(seqs, 64);
  for (const auto& batch : batches) {
    ForwardTrace trace = forward(checkpoint.params, batch, inference_mode);
    for (int b = 0; b < batch.size(); ++b) {
      const EncodedSequence& seq = *batch.sequences[b];
      for (std::size_t si = 0; si < seq.steps.size(); ++si) {
        const EncodedStep& step = seq.steps[si];
        if (!split.test_terms.count(step.target_term)) continue;
        const auto& probs = trace.steps[si].grade_probs;
        for (const auto& target : step.targets) {
          PredictionRecord rec;
          rec.student_id = seq.student_id;
          rec.race_index = seq.race_index;
          rec.term = step.target_term;
          rec.course = target.course;
          rec.actual = target.slot < dims.letter_count
                           ? GradeLabel::letter(target.slot)
                           : (target.slot == dims.letter_count ? GradeLabel::pass()
                                                               : GradeLabel::no_pass());
          rec.letter_probs = probs.col(b).segment(target.course * lw, dims.letter_count);
          rec.pass_np_probs =
              probs.col(b).segment(target.course * lw + dims.letter_count, 2);
          out.records.push_back(std::move(rec));
        }
      }
    }
  }
  return out;
}

std::map<std::string, StrategyOutcome> run_matrix(
    const CohortDataset& dataset, const SplitSpec& split,
    const std::vector<StrategyConfig>& strategies, const TrainConfig& config) {
  std::map<std::string, StrategyOutcome> out;
  for (const auto& strategy : strategies) {
    StrategyOutcome outcome;
    try {
      TrainResult result = train(dataset, split, strategy, config);
      outcome.predictions =
          evaluate(result.checkpoint, dataset, split, strategy.inference_mode);
      outcome.result = std::move(result);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    out[to_string(strategy.id)] = std::move(outcome);
  }
  return out;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write history file " + path);
  out << "epoch,train_loss,val_loss\n";
  out.precision(17);
  for (const auto& h : history)
    out << h.epoch << ',' << h.train_loss << ',' << h.val_loss << '\n';
}

// --- Checkpoint serialization ----------------------------------------------
//
// Layout: 8-byte magic, little-endian u64 manifest length, JSON manifest,
// then the tensors as row-major little-endian IEEE-754 doubles in manifest
// order.

namespace {
constexpr char kMagic[8] = {'F', 'G', 'C', 'K', 'P', 'T', '1', '\n'};

json feature_spec_to_json(const FeatureSpec& f) {
  return json{{"mode", to_string(f.mode)},
              {"group_count", f.group_count},
              {"genders", f.genders},
              {"incomes", f.incomes},
              {"entries", f.entries},
              {"majors", f.majors}};
}

FeatureSpec feature_spec_from_json(const json& j) {
  FeatureSpec f;
  f.mode = feature_mode_from_string(j.at("mode").get<std::string>());
  f.group_count = j.at("group_count").get<int>();
  f.genders = j.at("genders").get<std::vector<std::string>>();
  f.incomes = j.at("incomes").get<std::vector<std::string>>();
  f.entries = j.at("entries").get<std::vector<std::string>>();
  f.majors = j.at("majors").get<std::vector<std::string>>();
  return f;
}

void write_tensor_row_major(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
}

Eigen::MatrixXd read_tensor_row_major(std::istream& in, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      m(r, c) = v;
    }
  if (!in) throw ParseError("checkpoint: truncated tensor data");
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const ModelDims& dims = ckpt.params.dims;
  json manifest{
      {"dims",
       {{"course_count", dims.course_count},
        {"letter_count", dims.letter_count},
        {"feature_dim", dims.feature_dim},
        {"hidden", dims.hidden},
        {"race_classes", dims.race_classes}}},
      {"letter_scale", ckpt.scale.tokens()},
      {"group_list", ckpt.group_list},
      {"features", feature_spec_to_json(ckpt.features)},
      {"strategy", ckpt.strategy_id},
      {"inference_mode", ckpt.inference_mode},
      {"alpha", ckpt.alpha},
      {"seed", ckpt.seed},
  };
  json tensors = json::array();
  for (const auto& [name, shape] : ModelParams::tensor_order(dims))
    tensors.push_back({{"name", name}, {"rows", shape.first}, {"cols", shape.second}});
  manifest["tensors"] = tensors;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint file " + path);
  const std::string text = manifest.dump();
  const std::uint64_t len = text.size();
  out.write(kMagic, sizeof(kMagic));
  char lenbuf[8];
  for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((len >> (8 * i)) & 0xff);
  out.write(lenbuf, 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  write_tensor_row_major(out, ckpt.params.w_gates);
  write_tensor_row_major(out, ckpt.params.b_gates);
  write_tensor_row_major(out, ckpt.params.w_grade);
  write_tensor_row_major(out, ckpt.params.b_grade);
  write_tensor_row_major(out, ckpt.params.w_race);
  write_tensor_row_major(out, ckpt.params.b_race);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint file " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw ParseError("checkpoint: bad magic in " + path);
  char lenbuf[8];
  in.read(lenbuf, 8);
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i)
    len |= static_cast<std::uint64_t>(static_cast<unsigned char>(lenbuf[i])) << (8 * i);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("checkpoint: truncated manifest");

  json manifest = json::parse(text);
  Checkpoint ckpt;
  const json& jd = manifest.at("dims");
  ModelDims dims;
  dims.course_count = jd.at("course_count").get<int>();
  dims.letter_count = jd.at("letter_count").get<int>();
  dims.feature_dim = jd.at("feature_dim").get<int>();
  dims.hidden = jd.at("hidden").get<int>();
  dims.race_classes = jd.at("race_classes").get<int>();
  dims.validate();

  ckpt.scale = LetterScale(manifest.at("letter_scale").get<std::vector<std::string>>());
  ckpt.group_list = manifest.at("group_list").get<std::vector<std::string>>();
  ckpt.features = feature_spec_from_json(manifest.at("features"));
  ckpt.strategy_id = manifest.at("strategy").get<std::string>();
  ckpt.inference_mode = manifest.at("inference_mode").get<std::string>();
  ckpt.alpha = manifest.at("alpha").get<double>();
  ckpt.seed = manifest.at("seed").get<std::uint64_t>();

  const auto expected = ModelParams::tensor_order(dims);
  const json& tensors = manifest.at("tensors");
  if (tensors.size() != expected.size())
    throw ParseError("checkpoint: unexpected tensor count");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (tensors[i].at("name").get<std::string>() != expected[i].first ||
        tensors[i].at("rows").get<int>() != expected[i].second.first ||
        tensors[i].at("cols").get<int>() != expected[i].second.second)
      throw ParseError("checkpoint: tensor '" + expected[i].first +
                       "' shape does not match the model dimensions");
  }

  ckpt.params.dims = dims;
  ckpt.params.w_gates = read_tensor_row_major(in, 4 * dims.hidden,
                                              dims.input_size() + dims.hidden);
  ckpt.params.b_gates = read_tensor_row_major(in, 4 * dims.hidden, 1);
  ckpt.params.w_grade = read_tensor_row_major(in, dims.grade_output_size(), dims.hidden);
  ckpt.params.b_grade = read_tensor_row_major(in, dims.grade_output_size(), 1);
  ckpt.params.w_race = read_tensor_row_major(in, dims.race_classes, dims.hidden);
  ckpt.params.b_race = read_tensor_row_major(in, dims.race_classes, 1);
  return ckpt;
}

}  // namespace fairgrade
