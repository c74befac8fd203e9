#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fairgrade/cohort.hpp"

namespace fairgrade {

enum class FeatureMode { None, Race, Multi };

FeatureMode feature_mode_from_string(const std::string& s);
std::string to_string(FeatureMode mode);

// Fixed attribute layout so that encodings (and checkpoints) are
// reproducible: race one-hot, then under Multi the gender, income,
// entry-status one-hots and the majors multi-hot, vocabularies sorted.
struct FeatureSpec {
  FeatureMode mode = FeatureMode::None;
  int group_count = 0;
  std::vector<std::string> genders;
  std::vector<std::string> incomes;
  std::vector<std::string> entries;
  std::vector<std::string> majors;

  static FeatureSpec build(const CohortDataset& dataset, FeatureMode mode);
  int dim() const;
  Eigen::VectorXd encode(const Student& student) const;
};

struct EncodingDims {
  int letter_count = 0;   // m
  int course_count = 0;   // n
  int feature_dim = 0;    // |f|

  int label_width() const { return letter_count + 2; }        // m+2
  int grade_width() const { return label_width() * course_count; }
  int input_width() const { return grade_width() + course_count + feature_dim; }
};

// Position of a label inside a course's (m+2)-wide block: letters occupy
// [0, m), Pass = m, NoPass = m+1.
int label_slot(const GradeLabel& grade, int letter_count);

struct CourseLabel {
  int course = 0;  // catalog index
  int slot = 0;    // label slot within the block
};

// One prediction step. Backing storage is sparse; dense_* materialize the
// contract vectors.
struct EncodedStep {
  int input_term = 0;    // term of the grades fed in
  int target_term = 0;   // term being predicted
  std::vector<CourseLabel> grades_in;   // grades at input_term
  std::vector<int> next_courses;        // enrollments at target_term
  std::vector<CourseLabel> targets;     // graded enrollments at target_term
  bool has_target_term = false;         // false for input-only trailing steps

  Eigen::VectorXd dense_grades(const EncodingDims& dims) const;
  Eigen::VectorXd dense_courses(const EncodingDims& dims) const;
  Eigen::VectorXd dense_target(const EncodingDims& dims) const;
  Eigen::VectorXd dense_mask(const EncodingDims& dims) const;
};

struct EncodedSequence {
  std::string student_id;
  int race_index = 0;
  Eigen::VectorXd attributes;  // constant per student; empty under None
  std::vector<EncodedStep> steps;
};

// Encodes the student's history as steps predicting terms in
// [first enrolled term + 1, term_limit). A student with a single enrolled
// term yields one input-only step so the sequence is never empty.
EncodedSequence encode_student(const Student& student, const CohortDataset& dataset,
                               const FeatureSpec& features,
                               int term_limit = -1);

// Reference to one graded target enrollment inside a batch.
struct TargetRef {
  int step = 0;
  int seq = 0;     // column within the batch
  int course = 0;
  int slot = 0;
  int term = 0;
  int race_index = 0;
};

struct Batch {
  std::vector<const EncodedSequence*> sequences;
  int max_steps = 0;

  int size() const { return static_cast<int>(sequences.size()); }
  bool valid(int step, int seq) const {
    return step < static_cast<int>(sequences[seq]->steps.size());
  }
  const EncodedStep* step(int step_idx, int seq) const {
    return valid(step_idx, seq) ? &sequences[seq]->steps[step_idx] : nullptr;
  }

  // All graded targets in the batch, in (step, seq, position) order.
  std::vector<TargetRef> targets() const;
};

std::vector<Batch> make_batches(const std::vector<EncodedSequence>& sequences,
                                int max_batch);
std::vector<Batch> make_batches(const std::vector<const EncodedSequence*>& sequences,
                                int max_batch);

}  // namespace fairgrade
