#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>

#include "fairgrade/errors.hpp"
#include "fairgrade/fairmetrics.hpp"

namespace fairgrade {

using nlohmann::json;

namespace {

struct MetricAccessor {
  const char* name;
  std::optional<double> (ConfusionCounts::*rate)() const;
  MetricSummary GroupReport::*summary;
};

constexpr MetricAccessor kMetrics[] = {
    {"TPR", &ConfusionCounts::tpr, &GroupReport::tpr_summary},
    {"TNR", &ConfusionCounts::tnr, &GroupReport::tnr_summary},
    {"Accuracy", &ConfusionCounts::accuracy, &GroupReport::accuracy_summary},
};

void put_pct(std::ostream& out, std::optional<double> v) {
  if (v.has_value())
    out << std::fixed << std::setprecision(4) << *v * 100.0;
  else
    out << "NA";
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<StrategyReport>& reports) {
  if (reports.empty()) throw ValidationError("report: no strategies");
  out << "metric,strategy";
  for (const auto& g : reports.front().report.group_names) out << ',' << g;
  out << ",Overall,Range,STD\n";

  for (const auto& metric : kMetrics) {
    for (const auto& sr : reports) {
      out << metric.name << ',' << sr.strategy;
      for (const auto& counts : sr.report.groups) {
        out << ',';
        put_pct(out, (counts.*metric.rate)());
      }
      out << ',';
      put_pct(out, (sr.report.overall.*metric.rate)());
      const MetricSummary& s = sr.report.*metric.summary;
      out << ',';
      put_pct(out, s.defined ? std::optional<double>(s.range) : std::nullopt);
      out << ',';
      put_pct(out, s.defined ? std::optional<double>(s.std_dev) : std::nullopt);
      out << '\n';
    }
  }
  for (const auto& sr : reports)
    for (const auto& note : sr.report.footnotes)
      out << "# " << sr.strategy << ": " << note << '\n';
}

void write_report_json(std::ostream& out, const std::vector<StrategyReport>& reports) {
  json root = json::array();
  for (const auto& sr : reports) {
    json groups = json::object();
    for (std::size_t g = 0; g < sr.report.group_names.size(); ++g) {
      const ConfusionCounts& c = sr.report.groups[g];
      json jg{{"support", c.support()},
              {"tp", c.tp},
              {"fp", c.fp},
              {"tn", c.tn},
              {"fn", c.fn},
              {"included", static_cast<bool>(sr.report.included[g])}};
      if (auto v = c.tpr()) jg["tpr"] = *v;
      if (auto v = c.tnr()) jg["tnr"] = *v;
      if (auto v = c.accuracy()) jg["accuracy"] = *v;
      if (auto v = c.fnr()) jg["fnr"] = *v;
      groups[sr.report.group_names[g]] = std::move(jg);
    }
    json summaries = json::object();
    for (const auto& metric : kMetrics) {
      const MetricSummary& s = sr.report.*metric.summary;
      summaries[metric.name] = {{"range", s.range}, {"std", s.std_dev},
                                {"defined", s.defined}};
    }
    json overall = json::object();
    if (auto v = sr.report.overall.tpr()) overall["tpr"] = *v;
    if (auto v = sr.report.overall.tnr()) overall["tnr"] = *v;
    if (auto v = sr.report.overall.accuracy()) overall["accuracy"] = *v;
    root.push_back({{"strategy", sr.strategy},
                    {"groups", std::move(groups)},
                    {"overall", std::move(overall)},
                    {"summaries", std::move(summaries)},
                    {"footnotes", sr.report.footnotes}});
  }
  out << root.dump(2) << '\n';
}

void write_tidy_csv(std::ostream& out, const std::vector<StrategyReport>& reports) {
  out << "strategy,group,metric,value\n";
  for (const auto& sr : reports) {
    for (std::size_t g = 0; g < sr.report.group_names.size(); ++g) {
      for (const auto& metric : kMetrics) {
        const auto v = (sr.report.groups[g].*metric.rate)();
        if (!v.has_value()) continue;
        out << sr.strategy << ',' << sr.report.group_names[g] << ',' << metric.name
            << ',' << std::fixed << std::setprecision(6) << *v << '\n';
      }
    }
  }
}

void write_delta_csv(std::ostream& out, const std::vector<StrategyReport>& reports,
                     const std::string& baseline) {
  const StrategyReport* base = nullptr;
  for (const auto& sr : reports)
    if (sr.strategy == baseline) base = &sr;
  if (base == nullptr)
    throw ValidationError("delta report: baseline strategy '" + baseline + "' missing");

  out << "strategy,group,metric,delta\n";
  for (const auto& sr : reports) {
    if (&sr == base) continue;
    for (std::size_t g = 0; g < sr.report.group_names.size(); ++g) {
      for (const auto& metric : kMetrics) {
        const auto v = (sr.report.groups[g].*metric.rate)();
        const auto b = (base->report.groups[g].*metric.rate)();
        if (!v.has_value() || !b.has_value()) continue;
        out << sr.strategy << ',' << sr.report.group_names[g] << ',' << metric.name
            << ',' << std::showpos << std::fixed << std::setprecision(6) << *v - *b
            << std::noshowpos << '\n';
      }
    }
  }
}

}  // namespace fairgrade
