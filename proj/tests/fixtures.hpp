#pragma once

#include <vector>

#include "fairgrade/rng.hpp"
#include "fairgrade/seqnet.hpp"

namespace fairgrade::testfix {

// Random ragged sequences compatible with `dims`; every step has at least
// one graded target except possibly trailing input-only steps.
inline std::vector<EncodedSequence> random_sequences(const ModelDims& dims, int count,
                                                     int max_steps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<EncodedSequence> seqs;
  for (int s = 0; s < count; ++s) {
    EncodedSequence seq;
    seq.student_id = "t" + std::to_string(s);
    seq.race_index = static_cast<int>(rng.below(dims.race_classes));
    seq.attributes = Eigen::VectorXd::Zero(dims.feature_dim);
    if (dims.feature_dim > 0) seq.attributes[rng.below(dims.feature_dim)] = 1.0;

    const int steps = 1 + static_cast<int>(rng.below(max_steps));
    for (int t = 0; t < steps; ++t) {
      EncodedStep step;
      step.input_term = t;
      step.target_term = t + 1;
      step.has_target_term = true;
      const int n_in = static_cast<int>(rng.below(dims.course_count + 1));
      for (int i = 0; i < n_in; ++i)
        step.grades_in.push_back({static_cast<int>(rng.below(dims.course_count)),
                                  static_cast<int>(rng.below(dims.label_width()))});
      const int n_out = 1 + static_cast<int>(rng.below(dims.course_count));
      for (int i = 0; i < n_out; ++i) {
        const int course = static_cast<int>(rng.below(dims.course_count));
        step.next_courses.push_back(course);
        step.targets.push_back({course, static_cast<int>(rng.below(dims.label_width()))});
      }
      seq.steps.push_back(std::move(step));
    }
    seqs.push_back(std::move(seq));
  }
  return seqs;
}

inline ModelParams zero_params(const ModelDims& dims) {
  ModelParams p = init_params(dims, 1);
  p.w_gates.setZero();
  p.b_gates.setZero();
  p.w_grade.setZero();
  p.b_grade.setZero();
  p.w_race.setZero();
  p.b_race.setZero();
  return p;
}

inline std::vector<int> races_of(const Batch& batch) {
  std::vector<int> races;
  for (const auto* seq : batch.sequences) races.push_back(seq->race_index);
  return races;
}

}  // namespace fairgrade::testfix
