#include "fairgrade/config.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "fairgrade/errors.hpp"

namespace fairgrade {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ParseError("config: '" + path + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw ParseError("config: unknown key '" + path + "." + key + "'");
}

template <typename T>
void maybe(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

SynthConfig parse_synth(const json& j) {
  SynthConfig c = SynthConfig::defaults();
  check_keys(j, "data.synth",
             {"seed", "num_students", "num_courses", "num_terms",
              "courses_per_term_weights", "min_stay_terms", "max_stay_terms", "groups",
              "affinity_skew", "ability_strength", "letter_scale"});
  maybe(j, "seed", c.seed);
  maybe(j, "num_students", c.num_students);
  maybe(j, "num_courses", c.num_courses);
  maybe(j, "num_terms", c.num_terms);
  maybe(j, "courses_per_term_weights", c.courses_per_term_weights);
  maybe(j, "min_stay_terms", c.min_stay_terms);
  maybe(j, "max_stay_terms", c.max_stay_terms);
  maybe(j, "affinity_skew", c.affinity_skew);
  maybe(j, "ability_strength", c.ability_strength);
  if (j.contains("letter_scale"))
    c.scale = LetterScale(j.at("letter_scale").get<std::vector<std::string>>());
  if (j.contains("groups")) {
    c.groups.clear();
    for (const auto& jg : j.at("groups")) {
      check_keys(jg, "data.synth.groups[]",
                 {"name", "proportion", "a_share", "b_or_better", "letter_share",
                  "pass_share", "graduation_rate"});
      GroupModel g;
      g.name = jg.at("name").get<std::string>();
      g.proportion = jg.at("proportion").get<double>();
      maybe(jg, "a_share", g.a_share);
      maybe(jg, "b_or_better", g.b_or_better);
      maybe(jg, "letter_share", g.letter_share);
      maybe(jg, "pass_share", g.pass_share);
      maybe(jg, "graduation_rate", g.graduation_rate);
      c.groups.push_back(std::move(g));
    }
  }
  c.validate();
  return c;
}

LabelWeightScheme parse_label_weighting(const json& j) {
  check_keys(j, "strategy.label_weighting", {"mode", "normalization"});
  LabelWeightScheme s;
  if (j.contains("mode")) {
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "off")
      s.mode = LabelWeightScheme::Mode::Off;
    else if (mode == "minibatch_inverse")
      s.mode = LabelWeightScheme::Mode::MinibatchInverse;
    else
      throw ParseError("config: bad label weighting mode '" + mode + "'");
  }
  if (j.contains("normalization")) {
    const auto norm = j.at("normalization").get<std::string>();
    if (norm == "literal")
      s.norm = LabelWeightScheme::Norm::Literal;
    else if (norm == "mean_one")
      s.norm = LabelWeightScheme::Norm::MeanOne;
    else
      throw ParseError("config: bad label weighting normalization '" + norm + "'");
  }
  return s;
}

SampleWeightScheme::Mode parse_sample_mode(const std::string& mode) {
  if (mode == "off") return SampleWeightScheme::Mode::Off;
  if (mode == "equal") return SampleWeightScheme::Mode::Equal;
  if (mode == "grad_rate") return SampleWeightScheme::Mode::GradRate;
  throw ParseError("config: bad sample weighting mode '" + mode + "'");
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: not valid JSON: ") + e.what());
  }
  check_keys(root, "", {"data", "model", "strategy", "train", "report"});

  RunConfig cfg;

  if (root.contains("data")) {
    const json& jd = root.at("data");
    check_keys(jd, "data",
               {"dir", "synth", "min_course_enrollments", "group_list", "letter_scale"});
    if (jd.contains("dir")) cfg.data_dir = jd.at("dir").get<std::string>();
    if (jd.contains("synth")) cfg.synth = parse_synth(jd.at("synth"));
    if (cfg.data_dir && cfg.synth)
      throw ParseError("config: data.dir and data.synth are mutually exclusive");
    maybe(jd, "min_course_enrollments", cfg.dataset_options.min_course_enrollments);
    if (jd.contains("group_list"))
      cfg.dataset_options.group_list = jd.at("group_list").get<std::vector<std::string>>();
    if (jd.contains("letter_scale"))
      cfg.dataset_options.scale =
          LetterScale(jd.at("letter_scale").get<std::vector<std::string>>());
  }

  if (root.contains("model")) {
    const json& jm = root.at("model");
    check_keys(jm, "model", {"hidden", "seed"});
    maybe(jm, "hidden", cfg.train.hidden);
    maybe(jm, "seed", cfg.train.seed);
  }

  if (root.contains("strategy")) {
    const json& js = root.at("strategy");
    check_keys(js, "strategy",
               {"id", "alone_group", "alpha", "label_weighting", "sample_weighting",
                "feature_mode", "inference_mode", "literal_eq6", "graduation_rates",
                "group_proportions"});
    if (js.contains("id"))
      cfg.strategy = StrategyConfig::from_id(
          strategy_id_from_string(js.at("id").get<std::string>()));
    maybe(js, "alone_group", cfg.strategy.alone_group);
    maybe(js, "alpha", cfg.strategy.alpha);
    maybe(js, "literal_eq6", cfg.strategy.literal_eq6);
    if (js.contains("label_weighting"))
      cfg.strategy.label_weighting = parse_label_weighting(js.at("label_weighting"));
    if (js.contains("sample_weighting")) {
      const json& jw = js.at("sample_weighting");
      check_keys(jw, "strategy.sample_weighting", {"mode"});
      if (jw.contains("mode"))
        cfg.strategy.sample_weighting.mode =
            parse_sample_mode(jw.at("mode").get<std::string>());
    }
    if (js.contains("feature_mode"))
      cfg.strategy.feature_mode =
          feature_mode_from_string(js.at("feature_mode").get<std::string>());
    if (js.contains("inference_mode"))
      cfg.strategy.inference_mode =
          run_mode_from_string(js.at("inference_mode").get<std::string>());
    if (js.contains("graduation_rates"))
      cfg.graduation_rates_by_name =
          js.at("graduation_rates").get<std::map<std::string, double>>();
    if (js.contains("group_proportions"))
      cfg.group_proportions_by_name =
          js.at("group_proportions").get<std::map<std::string, double>>();
  }

  if (root.contains("train")) {
    const json& jt = root.at("train");
    check_keys(jt, "train",
               {"seed", "batch_size", "learning_rate", "beta1", "beta2", "epsilon",
                "max_epochs", "patience", "apply_label_weighting_everywhere"});
    maybe(jt, "seed", cfg.train.seed);
    maybe(jt, "batch_size", cfg.train.batch_size);
    maybe(jt, "learning_rate", cfg.train.learning_rate);
    maybe(jt, "beta1", cfg.train.beta1);
    maybe(jt, "beta2", cfg.train.beta2);
    maybe(jt, "epsilon", cfg.train.epsilon);
    maybe(jt, "max_epochs", cfg.train.max_epochs);
    maybe(jt, "patience", cfg.train.patience);
    maybe(jt, "apply_label_weighting_everywhere",
          cfg.train.apply_label_weighting_everywhere);
  }

  if (root.contains("report")) {
    const json& jr = root.at("report");
    check_keys(jr, "report", {"cutoff", "include_groups", "out"});
    if (jr.contains("cutoff")) {
      const auto cut = jr.at("cutoff").get<std::string>();
      if (cut != "A" && cut != "B")
        throw ParseError("config: report.cutoff must be \"A\" or \"B\"");
      cfg.cutoff = cut[0];
    }
    if (jr.contains("include_groups"))
      cfg.include_groups = jr.at("include_groups").get<std::vector<std::string>>();
    maybe(jr, "out", cfg.out_path);
  }

  cfg.train.validate();
  return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_run_config_text(text);
}

CohortDataset RunConfig::load_dataset() const {
  if (synth) {
    return generate(*synth);
  }
  if (data_dir) {
    return load_dataset_dir(*data_dir, dataset_options);
  }
  throw ValidationError("config: data section needs either 'dir' or 'synth'");
}

StrategyConfig RunConfig::resolved_strategy(const CohortDataset& dataset) const {
  StrategyConfig s = strategy;
  auto resolve = [&](const std::map<std::string, double>& by_name) {
    std::map<int, double> out;
    for (const auto& [name, value] : by_name) {
      auto it = std::find(dataset.group_list.begin(), dataset.group_list.end(), name);
      if (it == dataset.group_list.end())
        throw ValidationError("config: group '" + name + "' not in the group list");
      out[static_cast<int>(it - dataset.group_list.begin())] = value;
    }
    return out;
  };
  if (!graduation_rates_by_name.empty())
    s.sample_weighting.graduation_rates = resolve(graduation_rates_by_name);
  else if (synth && s.sample_weighting.mode == SampleWeightScheme::Mode::GradRate) {
    for (std::size_t g = 0; g < synth->groups.size(); ++g)
      s.sample_weighting.graduation_rates[static_cast<int>(g)] =
          synth->groups[g].graduation_rate;
  }
  if (!group_proportions_by_name.empty())
    s.sample_weighting.group_proportions = resolve(group_proportions_by_name);
  return s;
}

std::vector<std::string> RunConfig::excluded_groups(const CohortDataset& dataset) const {
  if (include_groups.empty()) return {kDeclineToState};
  std::vector<std::string> excluded;
  for (const auto& g : dataset.group_list)
    if (std::find(include_groups.begin(), include_groups.end(), g) ==
        include_groups.end())
      excluded.push_back(g);
  return excluded;
}

}  // namespace fairgrade
