#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "fairgrade/seqnet.hpp"

namespace fairgrade {

struct LabelWeightScheme {
  enum class Mode { Off, MinibatchInverse };
  enum class Norm { Literal, MeanOne };
  Mode mode = Mode::Off;
  Norm norm = Norm::MeanOne;
};

struct SampleWeightScheme {
  enum class Mode { Off, Equal, GradRate };
  Mode mode = Mode::Off;
  // Keyed by race index. `group_proportions` drive Equal (1/r); the
  // graduation rates drive GradRate (1 - d).
  std::map<int, double> group_proportions;
  std::map<int, double> graduation_rates;
};

struct GradeLossResult {
  double loss = 0.0;
  // Per step, grade_output_size x B; empty matrix where the step has no
  // active targets.
  std::vector<Eigen::MatrixXd> d_logits;
};

struct RaceLossResult {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> d_logits;  // per step, race_classes x B
};

// Two-level masked cross-entropy. The target list doubles as the mask:
// a course is masked in exactly when it appears in `targets`, and its
// one-hot lives entirely in the letter or Pass/NoPass sub-block, so the
// other sub-block contributes zero.
GradeLossResult masked_ce(const ForwardTrace& trace,
                          const std::vector<TargetRef>& targets);

// Same loss with each target scaled by sigma[k] * lambda[seq]. Unit
// weights reduce it to masked_ce exactly.
GradeLossResult combined_loss(const ForwardTrace& trace,
                              const std::vector<TargetRef>& targets,
                              const std::vector<double>& sigma,
                              const std::vector<double>& lambda_per_seq);

// Minibatch inverse-frequency grade-label weights, one per target.
// Literal weights sum to 1 over the minibatch; MeanOne rescales them to
// average 1.
std::vector<double> label_weights(const std::vector<TargetRef>& targets,
                                  const ModelDims& dims,
                                  const LabelWeightScheme& scheme);

// Per-student race weights, normalized so the weight mean over training
// enrollments is 1. `enrollment_counts[s]` is the number of graded target
// enrollments student s contributes.
std::vector<double> sample_weights(const std::vector<int>& races,
                                   const std::vector<std::int64_t>& enrollment_counts,
                                   const SampleWeightScheme& scheme);

// Unnormalized per-group weights (1/r or 1-d); exposed for tests and
// reporting.
std::map<int, double> raw_group_weights(const SampleWeightScheme& scheme);

// Cross-entropy of the per-step race predictions against each sequence's
// race, averaged over valid (non-padding) steps.
RaceLossResult adversarial_loss(const ForwardTrace& trace,
                                const std::vector<int>& race_targets);

}  // namespace fairgrade
