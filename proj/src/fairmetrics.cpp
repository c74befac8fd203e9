#include "fairgrade/fairmetrics.hpp"

#include <algorithm>
#include <cmath>

#include "fairgrade/errors.hpp"

namespace fairgrade {

namespace {
std::optional<double> rate(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

std::optional<double> ConfusionCounts::tpr() const { return rate(tp, tp + fn); }
std::optional<double> ConfusionCounts::tnr() const { return rate(tn, tn + fp); }
std::optional<double> ConfusionCounts::fpr() const { return rate(fp, fp + tn); }
std::optional<double> ConfusionCounts::fnr() const { return rate(fn, fn + tp); }
std::optional<double> ConfusionCounts::accuracy() const {
  return rate(tp + tn, support());
}

std::vector<BinaryOutcome> binarize(const PredictionSet& predictions,
                                    const LetterScale& scale, char cutoff) {
  if (cutoff != 'A' && cutoff != 'B')
    throw ValidationError("binarize: cutoff must be 'A' or 'B'");
  std::vector<BinaryOutcome> out;
  for (const auto& rec : predictions.records) {
    if (!rec.actual.is_letter()) continue;  // P/NP excluded from binary metrics
    Eigen::Index argmax = 0;
    rec.letter_probs.maxCoeff(&argmax);
    BinaryOutcome o;
    o.predicted_positive = scale.in_cutoff(static_cast<int>(argmax), cutoff);
    o.actual_positive = scale.in_cutoff(rec.actual.letter_index, cutoff);
    o.group = rec.race_index;
    out.push_back(o);
  }
  return out;
}

MetricSummary summarize_metric(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  s.defined = true;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  s.range = *mx - *mn;
  if (values.size() < 2) {
    s.std_dev = 0.0;
    return s;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  s.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

GroupReport group_report(const std::vector<BinaryOutcome>& outcomes,
                         const std::vector<std::string>& group_list,
                         const std::vector<std::string>& excluded_groups) {
  if (outcomes.empty()) throw ValidationError("group_report: no outcomes");

  GroupReport report;
  report.group_names = group_list;
  report.groups.assign(group_list.size(), ConfusionCounts{});
  report.included.assign(group_list.size(), true);

  for (const auto& o : outcomes) {
    if (o.group < 0 || o.group >= static_cast<int>(group_list.size()))
      throw InternalError("group_report: outcome group index out of range");
    ConfusionCounts& c = report.groups[o.group];
    if (o.actual_positive) {
      o.predicted_positive ? ++c.tp : ++c.fn;
    } else {
      o.predicted_positive ? ++c.fp : ++c.tn;
    }
    ConfusionCounts& all = report.overall;
    if (o.actual_positive) {
      o.predicted_positive ? ++all.tp : ++all.fn;
    } else {
      o.predicted_positive ? ++all.fp : ++all.tn;
    }
  }

  std::vector<double> tprs, tnrs, accs;
  for (std::size_t g = 0; g < group_list.size(); ++g) {
    const bool name_excluded =
        std::find(excluded_groups.begin(), excluded_groups.end(), group_list[g]) !=
        excluded_groups.end();
    const ConfusionCounts& c = report.groups[g];
    const bool defined = c.tpr().has_value() && c.tnr().has_value();
    if (name_excluded || !defined) {
      report.included[g] = false;
      if (c.support() > 0 && !defined && !name_excluded)
        report.footnotes.push_back("group '" + group_list[g] +
                                   "' excluded: undefined rate");
      if (c.support() == 0 && !name_excluded)
        report.footnotes.push_back("group '" + group_list[g] + "' excluded: no support");
      continue;
    }
    tprs.push_back(*c.tpr());
    tnrs.push_back(*c.tnr());
    accs.push_back(*c.accuracy());
  }

  report.tpr_summary = summarize_metric(tprs);
  report.tnr_summary = summarize_metric(tnrs);
  report.accuracy_summary = summarize_metric(accs);
  return report;
}

FairnessCriteria fairness_criteria(const std::vector<BinaryOutcome>& outcomes) {
  std::map<int, ConfusionCounts> per_group;
  for (const auto& o : outcomes) {
    ConfusionCounts& c = per_group[o.group];
    if (o.actual_positive) {
      o.predicted_positive ? ++c.tp : ++c.fn;
    } else {
      o.predicted_positive ? ++c.fp : ++c.tn;
    }
  }

  FairnessCriteria out;
  std::vector<double> pos_rates, tprs, fprs;
  for (const auto& [group, c] : per_group) {
    const auto tpr = c.tpr();
    const auto fpr = c.fpr();
    if (!tpr || !fpr) {
      out.excluded_groups.push_back(group);
      continue;
    }
    pos_rates.push_back(static_cast<double>(c.tp + c.fp) /
                        static_cast<double>(c.support()));
    tprs.push_back(*tpr);
    fprs.push_back(*fpr);
  }
  if (pos_rates.size() < 2)
    throw ValidationError("fairness_criteria: need at least 2 groups with defined rates");

  auto gap = [](const std::vector<double>& v) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return *mx - *mn;
  };
  out.demographic_parity_gap = gap(pos_rates);
  out.equal_opportunity_gap = gap(tprs);
  out.equalized_odds_gap = std::max(gap(tprs), gap(fprs));
  return out;
}

}  // namespace fairgrade
