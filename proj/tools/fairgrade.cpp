// fairgrade: synthetic-cohort grade prediction with bias-mitigation
// strategies and group-fairness reporting.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fairgrade/config.hpp"
#include "fairgrade/errors.hpp"
#include "fairgrade/fairmetrics.hpp"
#include "fairgrade/gradcheck.hpp"
#include "fairgrade/log.hpp"

namespace fg = fairgrade;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct SynthArgs {
  std::string config_path;
  std::string out_dir = ".";
  double tolerance = 0.01;
};

int cmd_synth(const SynthArgs& args) {
  fg::SynthConfig config = fg::SynthConfig::defaults();
  if (!args.config_path.empty()) {
    fg::RunConfig run = fg::parse_run_config_file(args.config_path);
    if (!run.synth)
      throw fg::ValidationError("synth: config has no data.synth section");
    config = *run.synth;
  }
  const fg::CohortDataset dataset = fg::generate(config);
  std::filesystem::create_directories(args.out_dir);
  fg::write_dataset_dir(args.out_dir, dataset);

  const auto checks = fg::verify_statistics(dataset, config, args.tolerance);
  std::ofstream stats(args.out_dir + "/stats.csv");
  stats << "statistic,target,observed,defined,pass\n";
  bool all_pass = true;
  for (const auto& c : checks) {
    stats << c.statistic << ',' << c.target << ',' << c.observed << ','
          << (c.defined ? 1 : 0) << ',' << (c.pass ? 1 : 0) << '\n';
    if (c.defined && !c.pass) all_pass = false;
  }
  fg::log::info("wrote " + args.out_dir + "/enrollments.csv, demographics.csv, stats.csv");
  if (!all_pass) fg::log::info("some statistics fell outside tolerance; see stats.csv");
  return kExitOk;
}

struct TrainArgs {
  std::string config_path;
  std::string strategy_override;
  double alpha_override = -1.0;
  std::int64_t seed_override = -1;
  std::string out = "checkpoint.fgc";
};

int cmd_train(const TrainArgs& args) {
  fg::RunConfig run = fg::parse_run_config_file(args.config_path);
  // Flag > config > default.
  if (!args.strategy_override.empty())
    run.strategy = fg::StrategyConfig::from_id(
        fg::strategy_id_from_string(args.strategy_override), {},
        run.strategy.alone_group,
        run.strategy.alpha > 0.0 ? run.strategy.alpha : 0.1);
  if (args.alpha_override >= 0.0) run.strategy.alpha = args.alpha_override;
  if (args.seed_override >= 0)
    run.train.seed = static_cast<std::uint64_t>(args.seed_override);

  const fg::CohortDataset dataset = run.load_dataset();
  const fg::SplitSpec split = fg::chronological_split(dataset);
  const fg::StrategyConfig strategy = run.resolved_strategy(dataset);

  fg::log::info("training strategy '" + fg::to_string(strategy.id) + "' on " +
                std::to_string(dataset.students.size()) + " students");
  const fg::TrainResult result = fg::train(dataset, split, strategy, run.train);
  fg::save_checkpoint(args.out, result.checkpoint);
  fg::write_history_csv(args.out + ".history.csv", result.history);
  fg::log::info("best epoch " + std::to_string(result.best_epoch) + ", val loss " +
                std::to_string(result.best_val_loss));
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> checkpoints;
  std::string data_dir;
  std::string config_path;
  std::string cutoff = "A";
  std::string out = "report";
};

int cmd_report(const ReportArgs& args) {
  fg::RunConfig run;
  if (!args.config_path.empty()) run = fg::parse_run_config_file(args.config_path);
  if (!args.data_dir.empty()) {
    run.data_dir = args.data_dir;
    run.synth.reset();
  }
  if (args.cutoff != "A" && args.cutoff != "B")
    throw fg::ValidationError("report: cutoff must be A or B");

  std::vector<fg::StrategyReport> reports;
  fg::CohortDataset dataset;
  bool have_dataset = false;

  for (const auto& path : args.checkpoints) {
    const fg::Checkpoint ckpt = fg::load_checkpoint(path);
    if (!have_dataset) {
      if (!run.data_dir && !run.synth)
        throw fg::ValidationError("report: no data source (--data or config)");
      run.dataset_options.group_list = ckpt.group_list;
      run.dataset_options.scale = ckpt.scale;
      dataset = run.load_dataset();
      have_dataset = true;
    }
    const fg::SplitSpec split = fg::chronological_split(dataset);
    const fg::PredictionSet preds =
        fg::evaluate(ckpt, dataset, split, fg::run_mode_from_string(ckpt.inference_mode));
    const auto outcomes = fg::binarize(preds, dataset.scale, args.cutoff[0]);
    reports.push_back({ckpt.strategy_id,
                       fg::group_report(outcomes, dataset.group_list,
                                        run.excluded_groups(dataset))});
  }

  {
    std::ofstream out(args.out + ".csv");
    fg::write_report_csv(out, reports);
  }
  {
    std::ofstream out(args.out + ".json");
    fg::write_report_json(out, reports);
  }
  {
    std::ofstream out(args.out + "_tidy.csv");
    fg::write_tidy_csv(out, reports);
  }
  const bool has_default =
      std::any_of(reports.begin(), reports.end(),
                  [](const auto& r) { return r.strategy == "default"; });
  if (has_default && reports.size() > 1) {
    std::ofstream out(args.out + "_delta.csv");
    fg::write_delta_csv(out, reports);
  }
  fg::log::info("wrote " + args.out + ".csv/.json");
  return kExitOk;
}

struct GradcheckArgs {
  std::int64_t seed = 7;
  int courses = 3;
  int letters = 4;
  int hidden = 5;
  int races = 4;
  bool corrupt = false;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  fg::ModelDims dims;
  dims.course_count = args.courses;
  dims.letter_count = args.letters;
  dims.hidden = args.hidden;
  dims.race_classes = args.races;
  dims.feature_dim = args.races;

  fg::GradCheckOptions options;
  options.corrupt = args.corrupt;
  const auto results = fg::gradcheck_sweep(
      dims,
      {static_cast<std::uint64_t>(args.seed), static_cast<std::uint64_t>(args.seed) + 1,
       static_cast<std::uint64_t>(args.seed) + 2},
      options);

  bool all_pass = true;
  double worst = 0.0;
  for (const auto& r : results) {
    std::printf("%-18s alpha=%.1f seed=%llu  max_rel_err=%.3e  %s\n",
                fg::to_string(r.variant).c_str(), r.alpha,
                static_cast<unsigned long long>(r.seed), r.max_rel_error,
                r.pass ? "pass" : "FAIL");
    worst = std::max(worst, r.max_rel_error);
    all_pass = all_pass && r.pass;
  }
  std::printf("gradcheck %s (max relative error %.3e)\n", all_pass ? "PASS" : "FAIL",
              worst);
  return all_pass ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrent course-grade prediction with bias-mitigation strategies"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  synth->add_option("--config", synth_args.config_path, "Run config with a data.synth section");
  synth->add_option("--out-dir", synth_args.out_dir, "Output directory");
  synth->add_option("--tolerance", synth_args.tolerance, "Statistics tolerance");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train one strategy");
  train->add_option("--config", train_args.config_path, "Run config path")->required();
  train->add_option("--strategy", train_args.strategy_override,
                    "Strategy id override (" + [] {
                      std::string s;
                      for (const auto& n : fg::strategy_id_names())
                        s += (s.empty() ? "" : "|") + n;
                      return s;
                    }() + ")");
  train->add_option("--alpha", train_args.alpha_override, "Adversarial loss weight");
  train->add_option("--seed", train_args.seed_override, "Seed override");
  train->add_option("--out", train_args.out, "Checkpoint output path");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Table-2-style fairness report");
  report->add_option("--checkpoints", report_args.checkpoints, "Checkpoint files")
      ->required()
      ->expected(-1);
  report->add_option("--data", report_args.data_dir, "Dataset directory");
  report->add_option("--config", report_args.config_path, "Run config path");
  report->add_option("--cutoff", report_args.cutoff, "Binarization cutoff (A or B)");
  report->add_option("--out", report_args.out, "Output path prefix");

  GradcheckArgs grad_args;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--seed", grad_args.seed, "Base seed");
  gradcheck->add_option("--courses", grad_args.courses, "Catalog size n");
  gradcheck->add_option("--letters", grad_args.letters, "Letter count m");
  gradcheck->add_option("--hidden", grad_args.hidden, "Hidden size");
  gradcheck->add_option("--races", grad_args.races, "Race classes");
  gradcheck->add_flag("--corrupt", grad_args.corrupt,
                      "Corrupt the analytic gradient (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (train->parsed()) return cmd_train(train_args);
    if (report->parsed()) return cmd_report(report_args);
    if (gradcheck->parsed()) return cmd_gradcheck(grad_args);
  } catch (const fg::ParseError& e) {
    fg::log::error(e.what());
    return kExitUsage;
  } catch (const fg::ValidationError& e) {
    fg::log::error(e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fg::log::error(e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
