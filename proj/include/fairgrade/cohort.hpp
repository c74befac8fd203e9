#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fairgrade/errors.hpp"

namespace fairgrade {

// Ordered letter-grade tokens, best first. Default is a 13-token scale
// (A+ .. D-, F); Pass/No-Pass live outside the scale.
class LetterScale {
 public:
  LetterScale() : LetterScale(default_tokens()) {}
  explicit LetterScale(std::vector<std::string> tokens);

  static std::vector<std::string> default_tokens();

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int index) const { return tokens_.at(index); }
  std::optional<int> index_of(const std::string& token) const;

  // Category = leading letter of the token. The A-category cutoff covers
  // {A+, A, A-}; the B cutoff additionally covers B+, B, B-.
  bool in_cutoff(int index, char cutoff_letter) const;

  bool operator==(const LetterScale&) const = default;

 private:
  std::vector<std::string> tokens_;
};

struct GradeLabel {
  enum class Kind { Letter, Pass, NoPass };
  Kind kind = Kind::Letter;
  int letter_index = 0;  // valid iff kind == Letter

  static GradeLabel letter(int index) { return {Kind::Letter, index}; }
  static GradeLabel pass() { return {Kind::Pass, 0}; }
  static GradeLabel no_pass() { return {Kind::NoPass, 0}; }

  bool is_letter() const { return kind == Kind::Letter; }
  bool operator==(const GradeLabel&) const = default;
};

struct Enrollment {
  std::string student_id;
  int term = 0;
  std::string course_id;
  GradeLabel grade;

  bool operator==(const Enrollment&) const = default;
};

struct StudentDemographics {
  std::string student_id;
  std::string race;
  std::string gender;
  std::string income_bracket;
  std::string entry_status;
  std::vector<std::string> majors;

  bool operator==(const StudentDemographics&) const = default;
};

// One student's enrollments in one term, courses as catalog indices.
struct TermRecord {
  int term = 0;
  std::vector<std::pair<int, GradeLabel>> courses;

  bool operator==(const TermRecord&) const = default;
};

struct Student {
  StudentDemographics demographics;
  int race_index = 0;  // into CohortDataset::group_list
  std::vector<TermRecord> terms;  // sorted ascending by term

  bool operator==(const Student&) const = default;
};

// Immutable after construction; safe to share across threads.
struct CohortDataset {
  std::vector<std::string> catalog;     // course ids, order = input position
  std::vector<std::string> group_list;  // race categories
  LetterScale scale;
  std::vector<Student> students;
  int term_count = 0;

  int course_count() const { return static_cast<int>(catalog.size()); }
  std::optional<int> course_index(const std::string& course_id) const;

  bool operator==(const CohortDataset&) const = default;
};

struct SplitSpec {
  std::set<int> train_terms;
  std::set<int> val_terms;
  std::set<int> test_terms;
};

std::vector<std::string> default_group_list();

// Groups excluded from fairness range/STD tables by default.
inline const std::string kDeclineToState = "Decline-to-State";

struct DatasetOptions {
  int min_course_enrollments = 20;
  std::vector<std::string> group_list = default_group_list();
  LetterScale scale;
};

// `enrollments.csv`: student_id,term,course_id,grade  (header required).
std::vector<Enrollment> parse_enrollments(std::istream& in, const LetterScale& scale);

// `demographics.csv`: student_id,race,gender,income_bracket,entry_status,majors.
std::vector<StudentDemographics> parse_demographics(std::istream& in);

CohortDataset build_dataset(const std::vector<Enrollment>& enrollments,
                            const std::vector<StudentDemographics>& demographics,
                            const DatasetOptions& options);

void write_enrollments(std::ostream& out, const CohortDataset& dataset);
void write_demographics(std::ostream& out, const CohortDataset& dataset);

// Convenience: load both CSV files from a directory and build the dataset.
CohortDataset load_dataset_dir(const std::string& dir, const DatasetOptions& options);
void write_dataset_dir(const std::string& dir, const CohortDataset& dataset);

// Trailing-term split: the last ratios.test-proportional terms go to test,
// the ones before to validation, everything earlier to train.
SplitSpec chronological_split(const CohortDataset& dataset,
                              int ratio_train = 13, int ratio_val = 1, int ratio_test = 1);

std::string grade_token(const GradeLabel& grade, const LetterScale& scale);

}  // namespace fairgrade
