#include "fairgrade/gradcheck.hpp"

#include <cmath>

#include "fairgrade/errors.hpp"
#include "fairgrade/losses.hpp"
#include "fairgrade/rng.hpp"

namespace fairgrade {

std::string to_string(GradVariant v) {
  switch (v) {
    case GradVariant::MaskedCe: return "masked_ce";
    case GradVariant::Weighted: return "weighted_ce";
    case GradVariant::AdversarialTrunk: return "adversarial_trunk";
    case GradVariant::AdversarialHead: return "adversarial_head";
    case GradVariant::LiteralCombined: return "literal_combined";
  }
  return "?";
}

namespace {

struct Fixture {
  std::vector<EncodedSequence> sequences;
  Batch batch;
  std::vector<TargetRef> targets;
  std::vector<int> races;
  std::vector<double> sigma;
  std::vector<double> lambda;
};

Fixture make_fixture(const ModelDims& dims, std::uint64_t seed, bool random_weights) {
  Rng rng(seed ^ 0xf1f1f1f1ULL);
  Fixture fx;
  const int n_seqs = 2;
  const int n_steps = 3;

  for (int s = 0; s < n_seqs; ++s) {
    EncodedSequence seq;
    seq.student_id = "fx" + std::to_string(s);
    seq.race_index = static_cast<int>(rng.below(dims.race_classes));
    seq.attributes = Eigen::VectorXd::Zero(dims.feature_dim);
    if (dims.feature_dim > 0) seq.attributes[rng.below(dims.feature_dim)] = 1.0;

    // Ragged lengths so padding is exercised.
    const int steps = s == 0 ? n_steps : n_steps - 1;
    for (int t = 0; t < steps; ++t) {
      EncodedStep step;
      step.input_term = t;
      step.target_term = t + 1;
      step.has_target_term = true;
      for (int c = 0; c < dims.course_count; ++c) {
        if (rng.uniform() < 0.5)
          step.grades_in.push_back({c, static_cast<int>(rng.below(dims.label_width()))});
        if (rng.uniform() < 0.6) {
          step.next_courses.push_back(c);
          step.targets.push_back({c, static_cast<int>(rng.below(dims.label_width()))});
        }
      }
      seq.steps.push_back(std::move(step));
    }
    fx.sequences.push_back(std::move(seq));
  }

  for (const auto& s : fx.sequences) {
    fx.batch.sequences.push_back(&s);
    fx.batch.max_steps =
        std::max(fx.batch.max_steps, static_cast<int>(s.steps.size()));
    fx.races.push_back(s.race_index);
  }
  fx.targets = fx.batch.targets();

  fx.sigma.assign(fx.targets.size(), 1.0);
  fx.lambda.assign(fx.sequences.size(), 1.0);
  if (random_weights) {
    for (auto& w : fx.sigma) w = rng.uniform(0.2, 2.0);
    for (auto& w : fx.lambda) w = rng.uniform(0.2, 2.0);
  }
  return fx;
}

double loss_value(const ModelParams& params, const Fixture& fx, GradVariant variant,
                  double alpha) {
  const ForwardTrace trace = forward(params, fx.batch, RunMode::Train);
  switch (variant) {
    case GradVariant::MaskedCe:
      return masked_ce(trace, fx.targets).loss;
    case GradVariant::Weighted:
      return combined_loss(trace, fx.targets, fx.sigma, fx.lambda).loss;
    case GradVariant::AdversarialHead:
      return adversarial_loss(trace, fx.races).loss;
    case GradVariant::AdversarialTrunk:
    case GradVariant::LiteralCombined:
      return combined_loss(trace, fx.targets, fx.sigma, fx.lambda).loss -
             alpha * adversarial_loss(trace, fx.races).loss;
  }
  return 0.0;
}

Eigen::VectorXd analytic_gradient(const ModelParams& params, const Fixture& fx,
                                  GradVariant variant, double alpha) {
  const ForwardTrace trace = forward(params, fx.batch, RunMode::Train);
  const GradeLossResult grade = combined_loss(trace, fx.targets, fx.sigma, fx.lambda);
  const RaceLossResult race = adversarial_loss(trace, fx.races);

  ParamGrads grads = [&] {
    switch (variant) {
      case GradVariant::MaskedCe:
      case GradVariant::Weighted:
        return backward(params, trace, grade.d_logits, {}, 0.0);
      default:
        return backward(params, trace, grade.d_logits, race.d_logits, alpha);
    }
  }();

  if (variant == GradVariant::AdversarialHead) {
    // Only the head part is checked; the trunk entries are not used.
  } else if (variant == GradVariant::LiteralCombined) {
    // Single-objective reading: the head descends the negated adversarial
    // term instead of plain cross-entropy.
    grads.w_race *= -alpha;
    grads.b_race *= -alpha;
  }
  return grads.flatten();
}

// Index ranges of the flattened parameter vector covered by each variant.
std::pair<Eigen::Index, Eigen::Index> checked_span(const ModelDims& dims,
                                                   GradVariant variant) {
  const Eigen::Index gates =
      4LL * dims.hidden * (dims.input_size() + dims.hidden) + 4LL * dims.hidden;
  const Eigen::Index grade =
      static_cast<Eigen::Index>(dims.grade_output_size()) * (dims.hidden + 1);
  const Eigen::Index race =
      static_cast<Eigen::Index>(dims.race_classes) * (dims.hidden + 1);
  switch (variant) {
    case GradVariant::AdversarialTrunk:
      return {0, gates + grade};
    case GradVariant::AdversarialHead:
      return {gates + grade, gates + grade + race};
    default:
      return {0, gates + grade + race};
  }
}

}  // namespace

GradCheckResult gradcheck(const ModelDims& dims, std::uint64_t seed, GradVariant variant,
                          double alpha, const GradCheckOptions& options) {
  dims.validate();
  const Fixture fx = make_fixture(dims, seed, variant != GradVariant::MaskedCe);
  ModelParams params = init_params(dims, seed);

  Eigen::VectorXd analytic = analytic_gradient(params, fx, variant, alpha);
  if (options.corrupt && analytic.size() > 0) analytic[0] += 1e-2;

  const auto [begin, end] = checked_span(dims, variant);
  Eigen::VectorXd theta = params.flatten();
  double max_rel = 0.0;
  for (Eigen::Index k = begin; k < end; ++k) {
    const double orig = theta[k];
    theta[k] = orig + options.fd_step;
    params.unflatten(theta);
    const double up = loss_value(params, fx, variant, alpha);
    theta[k] = orig - options.fd_step;
    params.unflatten(theta);
    const double down = loss_value(params, fx, variant, alpha);
    theta[k] = orig;

    const double fd = (up - down) / (2.0 * options.fd_step);
    const double a = analytic[k];
    const double rel = std::abs(a - fd) / std::max(std::abs(a) + std::abs(fd), 1e-6);
    max_rel = std::max(max_rel, rel);
  }
  params.unflatten(theta);

  GradCheckResult res;
  res.variant = variant;
  res.alpha = alpha;
  res.seed = seed;
  res.max_rel_error = max_rel;
  res.pass = max_rel <= options.tolerance;
  return res;
}

std::vector<GradCheckResult> gradcheck_sweep(const ModelDims& dims,
                                             const std::vector<std::uint64_t>& seeds,
                                             const GradCheckOptions& options) {
  std::vector<GradCheckResult> out;
  for (std::uint64_t seed : seeds) {
    out.push_back(gradcheck(dims, seed, GradVariant::MaskedCe, 0.0, options));
    out.push_back(gradcheck(dims, seed, GradVariant::Weighted, 0.0, options));
    for (double alpha : {0.1, 1.0}) {
      out.push_back(gradcheck(dims, seed, GradVariant::AdversarialTrunk, alpha, options));
      out.push_back(gradcheck(dims, seed, GradVariant::AdversarialHead, alpha, options));
      out.push_back(gradcheck(dims, seed, GradVariant::LiteralCombined, alpha, options));
    }
  }
  return out;
}

}  // namespace fairgrade
