#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "fairgrade/encoding.hpp"

namespace fairgrade {

enum class RunMode { Train, InferFull, InferRmv };

RunMode run_mode_from_string(const std::string& s);
std::string to_string(RunMode mode);

struct ModelDims {
  int course_count = 0;   // n
  int letter_count = 0;   // m
  int feature_dim = 0;    // |f|
  int hidden = 64;
  int race_classes = 0;

  int label_width() const { return letter_count + 2; }
  int grade_width() const { return label_width() * course_count; }
  int input_size() const { return grade_width() + course_count + feature_dim; }
  int grade_output_size() const { return grade_width(); }

  EncodingDims encoding() const { return {letter_count, course_count, feature_dim}; }
  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

// Gate row order inside the stacked 4H blocks: input, forget, cell, output.
struct ModelParams {
  ModelDims dims;
  Eigen::MatrixXd w_gates;  // 4H x (input_size + H)
  Eigen::VectorXd b_gates;  // 4H
  Eigen::MatrixXd w_grade;  // grade_output_size x H
  Eigen::VectorXd b_grade;
  Eigen::MatrixXd w_race;   // race_classes x H
  Eigen::VectorXd b_race;

  // Stable flattening order used by checkpoints, Adam, and gradient checks:
  // w_gates, b_gates, w_grade, b_grade, w_race, b_race (column-major data).
  static std::vector<std::pair<std::string, std::pair<int, int>>> tensor_order(
      const ModelDims& dims);
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
  std::int64_t parameter_count() const;
};

struct ParamGrads {
  Eigen::MatrixXd w_gates;
  Eigen::VectorXd b_gates;
  Eigen::MatrixXd w_grade;
  Eigen::VectorXd b_grade;
  Eigen::MatrixXd w_race;
  Eigen::VectorXd b_race;

  static ParamGrads zeros(const ModelDims& dims);
  Eigen::VectorXd flatten() const;
  void check_finite() const;
};

// Cached activations for one batch; column b of every matrix belongs to
// sequence b.
struct StepTrace {
  Eigen::MatrixXd x;        // input_size x B
  Eigen::MatrixXd gate_i, gate_f, gate_g, gate_o;  // H x B, post-activation
  Eigen::MatrixXd cell, cell_tanh, hidden;         // H x B
  Eigen::MatrixXd grade_probs;  // grade_output_size x B, blockwise softmax
  Eigen::MatrixXd race_probs;   // race_classes x B
};

struct ForwardTrace {
  const Batch* batch = nullptr;
  ModelDims dims;
  std::vector<StepTrace> steps;

  int step_count() const { return static_cast<int>(steps.size()); }
};

ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

ForwardTrace forward(const ModelParams& params, const Batch& batch, RunMode mode);

// Backward pass of the combined objective. `d_grade_logits[t]` and
// `d_race_logits[t]` are gradients w.r.t. the pre-softmax outputs at step t
// (zero matrices where unused). Race-head parameters receive the plain
// race-loss gradient; the contribution flowing into the trunk through the
// hidden states is scaled by -alpha (gradient reversal).
ParamGrads backward(const ModelParams& params, const ForwardTrace& trace,
                    const std::vector<Eigen::MatrixXd>& d_grade_logits,
                    const std::vector<Eigen::MatrixXd>& d_race_logits,
                    double alpha);

struct GradeDistribution {
  Eigen::VectorXd letter;   // length m, sums to 1
  Eigen::VectorXd pass_np;  // length 2, sums to 1
};

// Distributions for the listed courses in the term following the encoded
// history.
std::map<int, GradeDistribution> predict_term(const ModelParams& params,
                                              const EncodedSequence& history,
                                              const std::vector<int>& enrollments,
                                              RunMode mode);

// Blockwise softmax over each course's (m+2) block: letters and Pass/NoPass
// normalized separately. Operates column-wise on logits.
void blockwise_grade_softmax(const ModelDims& dims, Eigen::MatrixXd& logits);
void column_softmax(Eigen::MatrixXd& logits);

}  // namespace fairgrade
