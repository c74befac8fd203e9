#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairgrade/trainer.hpp"

namespace fairgrade {

struct BinaryOutcome {
  bool predicted_positive = false;
  bool actual_positive = false;
  int group = 0;
};

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::int64_t support() const { return tp + fp + tn + fn; }
  std::int64_t positives() const { return tp + fn; }
  std::int64_t negatives() const { return tn + fp; }
  std::optional<double> tpr() const;
  std::optional<double> tnr() const;
  std::optional<double> fpr() const;
  std::optional<double> fnr() const;
  std::optional<double> accuracy() const;
};

struct MetricSummary {
  double range = 0.0;
  double std_dev = 0.0;  // sample (n-1) standard deviation
  bool defined = false;
};

struct GroupReport {
  std::vector<std::string> group_names;   // all groups, report order
  std::vector<ConfusionCounts> groups;    // parallel to group_names
  std::vector<bool> included;             // participates in range/STD
  ConfusionCounts overall;
  MetricSummary tpr_summary, tnr_summary, accuracy_summary;
  std::vector<std::string> footnotes;     // excluded/undefined groups
};

struct FairnessCriteria {
  double demographic_parity_gap = 0.0;
  double equal_opportunity_gap = 0.0;
  double equalized_odds_gap = 0.0;
  std::vector<int> excluded_groups;  // groups with undefined rates
};

// Binarizes letter-graded predictions at the category cutoff ('A' or 'B');
// P/NP enrollments are excluded.
std::vector<BinaryOutcome> binarize(const PredictionSet& predictions,
                                    const LetterScale& scale, char cutoff = 'A');

// Per-group confusion rates plus range and sample-STD fairness summaries.
// Groups named in `excluded_groups` (default: Decline-to-State) and groups
// with undefined rates are left out of the summaries.
GroupReport group_report(const std::vector<BinaryOutcome>& outcomes,
                         const std::vector<std::string>& group_list,
                         const std::vector<std::string>& excluded_groups = {
                             kDeclineToState});

FairnessCriteria fairness_criteria(const std::vector<BinaryOutcome>& outcomes);

// Range and sample standard deviation of a per-group metric vector, e.g.
// a row of published per-group percentages.
MetricSummary summarize_metric(const std::vector<double>& values);

struct StrategyReport {
  std::string strategy;
  GroupReport report;
};

// Table-style CSV: one row per metric x strategy, columns = groups,
// Overall, Range, STD, values in percent.
void write_report_csv(std::ostream& out, const std::vector<StrategyReport>& reports);
void write_report_json(std::ostream& out, const std::vector<StrategyReport>& reports);
// Tidy long-format rows (strategy,group,metric,value) for plotting.
void write_tidy_csv(std::ostream& out, const std::vector<StrategyReport>& reports);
// Signed per-group differences against the named baseline strategy.
void write_delta_csv(std::ostream& out, const std::vector<StrategyReport>& reports,
                     const std::string& baseline = "default");

}  // namespace fairgrade
