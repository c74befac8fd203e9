#include "fairgrade/losses.hpp"

#include <cmath>

#include "fairgrade/errors.hpp"

namespace fairgrade {

namespace {
constexpr double kTinyProb = 1e-300;  // guards log on fully saturated softmax
}

GradeLossResult combined_loss(const ForwardTrace& trace,
                              const std::vector<TargetRef>& targets,
                              const std::vector<double>& sigma,
                              const std::vector<double>& lambda_per_seq) {
  if (sigma.size() != targets.size())
    throw InternalError("combined_loss: sigma size does not match target count");
  const ModelDims& dims = trace.dims;
  const int lw = dims.label_width();
  const int m = dims.letter_count;

  GradeLossResult res;
  res.d_logits.assign(trace.step_count(), Eigen::MatrixXd());

  for (std::size_t k = 0; k < targets.size(); ++k) {
    const TargetRef& t = targets[k];
    const double w = sigma[k] * lambda_per_seq.at(t.seq);
    if (w < 0.0) throw ValidationError("negative loss weight");
    const StepTrace& st = trace.steps.at(t.step);

    Eigen::MatrixXd& dl = res.d_logits[t.step];
    if (dl.size() == 0)
      dl = Eigen::MatrixXd::Zero(dims.grade_output_size(), st.grade_probs.cols());

    const bool is_letter = t.slot < m;
    const int sub_off = t.course * lw + (is_letter ? 0 : m);
    const int sub_len = is_letter ? m : 2;
    const int hot = is_letter ? t.slot : t.slot - m;

    const auto probs = st.grade_probs.col(t.seq).segment(sub_off, sub_len);
    res.loss -= w * std::log(std::max(probs[hot], kTinyProb));
    dl.col(t.seq).segment(sub_off, sub_len) += w * probs;
    dl(sub_off + hot, t.seq) -= w;
  }
  return res;
}

GradeLossResult masked_ce(const ForwardTrace& trace,
                          const std::vector<TargetRef>& targets) {
  const std::vector<double> sigma(targets.size(), 1.0);
  const std::vector<double> lambda(
      trace.batch != nullptr ? trace.batch->size() : 0, 1.0);
  return combined_loss(trace, targets, sigma, lambda);
}

std::vector<double> label_weights(const std::vector<TargetRef>& targets,
                                  const ModelDims& dims,
                                  const LabelWeightScheme& scheme) {
  const std::size_t n = targets.size();
  if (scheme.mode == LabelWeightScheme::Mode::Off)
    return std::vector<double>(n, 1.0);
  if (n == 0) return {};

  // Label type = the full grade token, one of m+2 categories.
  std::vector<std::int64_t> counts(dims.label_width(), 0);
  for (const auto& t : targets) counts.at(t.slot)++;

  double inv_sum = 0.0;
  for (const auto& t : targets)
    inv_sum += static_cast<double>(n) / static_cast<double>(counts[t.slot]);

  std::vector<double> sigma(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double inv_p = static_cast<double>(n) / static_cast<double>(counts[targets[k].slot]);
    sigma[k] = inv_p / inv_sum;
    if (scheme.norm == LabelWeightScheme::Norm::MeanOne)
      sigma[k] *= static_cast<double>(n);
  }
  return sigma;
}

std::map<int, double> raw_group_weights(const SampleWeightScheme& scheme) {
  std::map<int, double> out;
  switch (scheme.mode) {
    case SampleWeightScheme::Mode::Off:
      break;
    case SampleWeightScheme::Mode::Equal:
      for (const auto& [race, r] : scheme.group_proportions) {
        if (r <= 0.0)
          throw ValidationError("equal weighting: group proportion must be positive");
        out[race] = 1.0 / r;
      }
      break;
    case SampleWeightScheme::Mode::GradRate:
      for (const auto& [race, d] : scheme.graduation_rates) {
        if (d < 0.0 || d > 1.0)
          throw ValidationError("graduation rate outside [0, 1]");
        out[race] = 1.0 - d;
      }
      break;
  }
  return out;
}

std::vector<double> sample_weights(const std::vector<int>& races,
                                   const std::vector<std::int64_t>& enrollment_counts,
                                   const SampleWeightScheme& scheme) {
  if (races.size() != enrollment_counts.size())
    throw InternalError("sample_weights: size mismatch");
  if (scheme.mode == SampleWeightScheme::Mode::Off)
    return std::vector<double>(races.size(), 1.0);

  const auto group_w = raw_group_weights(scheme);
  std::vector<double> lambda(races.size());
  double weighted = 0.0;
  std::int64_t total = 0;
  for (std::size_t s = 0; s < races.size(); ++s) {
    auto it = group_w.find(races[s]);
    if (it == group_w.end())
      throw ValidationError("race index " + std::to_string(races[s]) +
                            " missing from the sample-weighting scheme");
    lambda[s] = it->second;
    weighted += lambda[s] * static_cast<double>(enrollment_counts[s]);
    total += enrollment_counts[s];
  }
  if (weighted <= 0.0) return lambda;  // no graded enrollments; nothing to normalize
  const double scale = static_cast<double>(total) / weighted;
  for (double& l : lambda) l *= scale;
  return lambda;
}

RaceLossResult adversarial_loss(const ForwardTrace& trace,
                                const std::vector<int>& race_targets) {
  RaceLossResult res;
  res.d_logits.assign(trace.step_count(), Eigen::MatrixXd());
  if (trace.batch == nullptr || trace.step_count() == 0) return res;
  const Batch& batch = *trace.batch;
  if (static_cast<int>(race_targets.size()) != batch.size())
    throw InternalError("adversarial_loss: race target count mismatch");

  std::int64_t valid = 0;
  for (int t = 0; t < trace.step_count(); ++t)
    for (int b = 0; b < batch.size(); ++b)
      if (batch.valid(t, b)) ++valid;
  if (valid == 0) return res;

  const double inv_valid = 1.0 / static_cast<double>(valid);
  for (int t = 0; t < trace.step_count(); ++t) {
    const StepTrace& st = trace.steps[t];
    Eigen::MatrixXd dl = Eigen::MatrixXd::Zero(st.race_probs.rows(), st.race_probs.cols());
    bool any = false;
    for (int b = 0; b < batch.size(); ++b) {
      if (!batch.valid(t, b)) continue;
      any = true;
      const int truth = race_targets[b];
      res.loss -= inv_valid * std::log(std::max(st.race_probs(truth, b), kTinyProb));
      dl.col(b) = inv_valid * st.race_probs.col(b);
      dl(truth, b) -= inv_valid;
    }
    if (any) res.d_logits[t] = std::move(dl);
  }
  return res;
}

}  // namespace fairgrade
