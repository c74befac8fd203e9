#include <doctest.h>

#include <cmath>

#include "fairgrade/gradcheck.hpp"
#include "fairgrade/losses.hpp"
#include "fixtures.hpp"

using namespace fairgrade;
using doctest::Approx;

namespace {

ModelDims tiny_dims() {
  ModelDims dims;
  dims.course_count = 3;
  dims.letter_count = 4;
  dims.feature_dim = 4;
  dims.hidden = 5;
  dims.race_classes = 4;
  return dims;
}

double grad_gap(const ParamGrads& a, const ParamGrads& b) {
  return (a.flatten() - b.flatten()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("seqnet") {

TEST_CASE("initialization is seed deterministic") {
  ModelDims dims = tiny_dims();
  ModelParams a = init_params(dims, 42);
  ModelParams b = init_params(dims, 42);
  ModelParams c = init_params(dims, 43);
  CHECK(a.flatten() == b.flatten());
  CHECK((a.flatten() - c.flatten()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("forget gate bias starts at one") {
  ModelDims dims = tiny_dims();
  ModelParams p = init_params(dims, 7);
  const int h = dims.hidden;
  for (int i = 0; i < 4 * h; ++i) {
    const bool forget_row = i >= h && i < 2 * h;
    CHECK(p.b_gates[i] == (forget_row ? 1.0 : 0.0));
  }
  CHECK(p.b_grade.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.b_race.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("glorot bounds hold for the gate weights") {
  ModelDims dims = tiny_dims();
  ModelParams p = init_params(dims, 9);
  const double limit =
      std::sqrt(6.0 / static_cast<double>(dims.input_size() + dims.hidden + 4 * dims.hidden));
  CHECK(p.w_gates.cwiseAbs().maxCoeff() <= limit);
  CHECK(p.w_gates.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("flatten and unflatten round trip") {
  ModelDims dims = tiny_dims();
  ModelParams p = init_params(dims, 5);
  Eigen::VectorXd flat = p.flatten();
  CHECK(flat.size() == p.parameter_count());

  ModelParams q = init_params(dims, 6);
  q.unflatten(flat);
  CHECK(q.flatten() == flat);
  CHECK(q.w_gates == p.w_gates);
  CHECK(q.b_race == p.b_race);
}

TEST_CASE("zero weights give uniform predictions") {
  ModelDims dims = tiny_dims();
  ModelParams p = testfix::zero_params(dims);
  auto seqs = testfix::random_sequences(dims, 2, 3, 77);
  auto batches = make_batches(seqs, 2);
  ForwardTrace trace = forward(p, batches[0], RunMode::Train);

  const int lw = dims.label_width();
  for (const auto& st : trace.steps) {
    for (int b = 0; b < st.grade_probs.cols(); ++b) {
      for (int c = 0; c < dims.course_count; ++c) {
        for (int l = 0; l < dims.letter_count; ++l)
          CHECK(st.grade_probs(c * lw + l, b) == Approx(0.25).epsilon(1e-12));
        CHECK(st.grade_probs(c * lw + dims.letter_count, b) == Approx(0.5).epsilon(1e-12));
        CHECK(st.grade_probs(c * lw + dims.letter_count + 1, b) ==
              Approx(0.5).epsilon(1e-12));
      }
      for (int r = 0; r < dims.race_classes; ++r)
        CHECK(st.race_probs(r, b) == Approx(0.25).epsilon(1e-12));
    }
  }
}

TEST_CASE("blockwise softmax normalizes each sub-block") {
  ModelDims dims = tiny_dims();
  Rng rng(3);
  Eigen::MatrixXd logits(dims.grade_output_size(), 2);
  for (int i = 0; i < logits.rows(); ++i)
    for (int j = 0; j < logits.cols(); ++j) logits(i, j) = rng.uniform(-30.0, 30.0);

  blockwise_grade_softmax(dims, logits);
  const int lw = dims.label_width();
  for (int j = 0; j < logits.cols(); ++j) {
    for (int c = 0; c < dims.course_count; ++c) {
      CHECK(logits.col(j).segment(c * lw, dims.letter_count).sum() ==
            Approx(1.0).epsilon(1e-12));
      CHECK(logits.col(j).segment(c * lw + dims.letter_count, 2).sum() ==
            Approx(1.0).epsilon(1e-12));
    }
    CHECK(logits.col(j).minCoeff() >= 0.0);
  }
}

TEST_CASE("finite differences agree with the backward pass") {
  auto results = gradcheck_sweep(tiny_dims(), {101});
  REQUIRE(!results.empty());
  for (const auto& r : results) {
    INFO(to_string(r.variant), " alpha=", r.alpha);
    CHECK(r.pass);
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("a corrupted gradient fails the finite difference check") {
  GradCheckOptions options;
  options.corrupt = true;
  auto r = gradcheck(tiny_dims(), 101, GradVariant::MaskedCe, 0.0, options);
  CHECK(!r.pass);
}

TEST_CASE("appending target-free steps changes nothing") {
  ModelDims dims = tiny_dims();
  ModelParams p = init_params(dims, 13);
  auto seqs = testfix::random_sequences(dims, 3, 3, 55);
  auto batches = make_batches(seqs, 3);
  ForwardTrace trace = forward(p, batches[0], RunMode::Train);
  auto targets = batches[0].targets();
  auto base = masked_ce(trace, targets);
  ParamGrads base_grads = backward(p, trace, base.d_logits, {}, 0.0);

  // Same sequences with two empty trailing steps on each.
  auto padded = seqs;
  for (auto& seq : padded) {
    for (int extra = 0; extra < 2; ++extra) {
      EncodedStep step;
      step.input_term = seq.steps.back().input_term + 1;
      step.target_term = step.input_term + 1;
      step.has_target_term = false;
      seq.steps.push_back(step);
    }
  }
  auto padded_batches = make_batches(padded, 3);
  ForwardTrace padded_trace = forward(p, padded_batches[0], RunMode::Train);
  auto padded_targets = padded_batches[0].targets();
  REQUIRE(padded_targets.size() == targets.size());
  auto padded_loss = masked_ce(padded_trace, padded_targets);
  ParamGrads padded_grads = backward(p, padded_trace, padded_loss.d_logits, {}, 0.0);

  CHECK(padded_loss.loss == base.loss);
  CHECK(grad_gap(base_grads, padded_grads) == 0.0);
}

TEST_CASE("batched loss and gradients equal the per-sequence sums") {
  ModelDims dims = tiny_dims();
  ModelParams p = init_params(dims, 21);
  auto seqs = testfix::random_sequences(dims, 4, 4, 91);

  auto batches = make_batches(seqs, 4);
  ForwardTrace trace = forward(p, batches[0], RunMode::Train);
  auto batch_loss = masked_ce(trace, batches[0].targets());
  ParamGrads batch_grads = backward(p, trace, batch_loss.d_logits, {}, 0.0);

  double sum_loss = 0.0;
  Eigen::VectorXd sum_grads = Eigen::VectorXd::Zero(p.parameter_count());
  for (const auto& seq : seqs) {
    std::vector<EncodedSequence> one = {seq};
    auto b = make_batches(one, 1);
    ForwardTrace t = forward(p, b[0], RunMode::Train);
    auto l = masked_ce(t, b[0].targets());
    sum_loss += l.loss;
    sum_grads += backward(p, t, l.d_logits, {}, 0.0).flatten();
  }

  CHECK(batch_loss.loss == Approx(sum_loss).epsilon(1e-12));
  CHECK((batch_grads.flatten() - sum_grads).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("alpha zero shields the trunk from the adversary") {
  ModelDims dims = tiny_dims();
  ModelParams p = init_params(dims, 31);
  auto seqs = testfix::random_sequences(dims, 3, 3, 41);
  auto batches = make_batches(seqs, 3);
  ForwardTrace trace = forward(p, batches[0], RunMode::Train);
  auto grade = masked_ce(trace, batches[0].targets());
  auto race = adversarial_loss(trace, testfix::races_of(batches[0]));

  ParamGrads without = backward(p, trace, grade.d_logits, {}, 0.0);
  ParamGrads with = backward(p, trace, grade.d_logits, race.d_logits, 0.0);

  CHECK((without.w_gates - with.w_gates).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((without.b_gates - with.b_gates).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((without.w_grade - with.w_grade).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((without.b_grade - with.b_grade).cwiseAbs().maxCoeff() <= 1e-12);
  // The head itself still learns.
  CHECK(with.w_race.cwiseAbs().maxCoeff() > 0.0);
  CHECK(without.w_race.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feature removal zeroes the attribute slice at inference") {
  ModelDims dims = tiny_dims();
  ModelParams p = init_params(dims, 8);
  auto seqs = testfix::random_sequences(dims, 2, 3, 19);
  auto batches = make_batches(seqs, 2);

  ForwardTrace full = forward(p, batches[0], RunMode::InferFull);
  ForwardTrace removed = forward(p, batches[0], RunMode::InferRmv);

  // Attributes are one-hot in the fixture, so removal must change the
  // activations somewhere.
  bool any_diff = false;
  for (int t = 0; t < full.step_count(); ++t)
    if (full.steps[t].hidden != removed.steps[t].hidden) any_diff = true;
  CHECK(any_diff);

  // With the attribute weights zeroed the modes coincide.
  ModelParams stripped = p;
  stripped.w_gates.middleCols(dims.input_size() - dims.feature_dim, dims.feature_dim)
      .setZero();
  ForwardTrace a = forward(stripped, batches[0], RunMode::InferFull);
  ForwardTrace b = forward(stripped, batches[0], RunMode::InferRmv);
  for (int t = 0; t < a.step_count(); ++t)
    CHECK(a.steps[t].hidden == b.steps[t].hidden);
}

TEST_CASE("predict term returns normalized distributions") {
  ModelDims dims = tiny_dims();
  ModelParams p = testfix::zero_params(dims);
  auto seqs = testfix::random_sequences(dims, 1, 3, 61);

  auto dists = predict_term(p, seqs[0], {0, 2}, RunMode::InferFull);
  REQUIRE(dists.size() == 2);
  for (const auto& [course, dist] : dists) {
    CHECK(dist.letter.size() == dims.letter_count);
    CHECK(dist.letter.sum() == Approx(1.0).epsilon(1e-12));
    CHECK(dist.letter.minCoeff() == Approx(0.25).epsilon(1e-12));
    CHECK(dist.pass_np.sum() == Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(predict_term(p, seqs[0], {dims.course_count}, RunMode::InferFull),
                  ValidationError);
}

}  // TEST_SUITE
