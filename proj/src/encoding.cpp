#include "fairgrade/encoding.hpp"

#include <algorithm>
#include <set>

#include "fairgrade/errors.hpp"

namespace fairgrade {

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "none") return FeatureMode::None;
  if (s == "race") return FeatureMode::Race;
  if (s == "multi") return FeatureMode::Multi;
  throw ValidationError("unknown feature mode '" + s + "' (expected none|race|multi)");
}

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::None: return "none";
    case FeatureMode::Race: return "race";
    case FeatureMode::Multi: return "multi";
  }
  return "?";
}

FeatureSpec FeatureSpec::build(const CohortDataset& dataset, FeatureMode mode) {
  FeatureSpec spec;
  spec.mode = mode;
  if (mode == FeatureMode::None) return spec;
  spec.group_count = static_cast<int>(dataset.group_list.size());
  if (mode == FeatureMode::Race) return spec;

  std::set<std::string> genders, incomes, entries, majors;
  for (const auto& s : dataset.students) {
    genders.insert(s.demographics.gender);
    incomes.insert(s.demographics.income_bracket);
    entries.insert(s.demographics.entry_status);
    for (const auto& m : s.demographics.majors) majors.insert(m);
  }
  spec.genders.assign(genders.begin(), genders.end());
  spec.incomes.assign(incomes.begin(), incomes.end());
  spec.entries.assign(entries.begin(), entries.end());
  spec.majors.assign(majors.begin(), majors.end());
  return spec;
}

int FeatureSpec::dim() const {
  switch (mode) {
    case FeatureMode::None: return 0;
    case FeatureMode::Race: return group_count;
    case FeatureMode::Multi:
      return group_count + static_cast<int>(genders.size() + incomes.size() +
                                            entries.size() + majors.size());
  }
  return 0;
}

namespace {
int find_index(const std::vector<std::string>& vocab, const std::string& value) {
  auto it = std::find(vocab.begin(), vocab.end(), value);
  return it == vocab.end() ? -1 : static_cast<int>(it - vocab.begin());
}
}  // namespace

Eigen::VectorXd FeatureSpec::encode(const Student& student) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(dim());
  if (mode == FeatureMode::None) return f;
  if (student.race_index < 0 || student.race_index >= group_count)
    throw InternalError("race index out of range in feature encoding");
  f[student.race_index] = 1.0;
  if (mode == FeatureMode::Race) return f;

  int off = group_count;
  if (int i = find_index(genders, student.demographics.gender); i >= 0) f[off + i] = 1.0;
  off += static_cast<int>(genders.size());
  if (int i = find_index(incomes, student.demographics.income_bracket); i >= 0)
    f[off + i] = 1.0;
  off += static_cast<int>(incomes.size());
  if (int i = find_index(entries, student.demographics.entry_status); i >= 0)
    f[off + i] = 1.0;
  off += static_cast<int>(entries.size());
  for (const auto& m : student.demographics.majors)
    if (int i = find_index(majors, m); i >= 0) f[off + i] = 1.0;
  return f;
}

int label_slot(const GradeLabel& grade, int letter_count) {
  switch (grade.kind) {
    case GradeLabel::Kind::Letter: return grade.letter_index;
    case GradeLabel::Kind::Pass: return letter_count;
    case GradeLabel::Kind::NoPass: return letter_count + 1;
  }
  return 0;
}

Eigen::VectorXd EncodedStep::dense_grades(const EncodingDims& dims) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dims.grade_width());
  for (const auto& g : grades_in) v[g.course * dims.label_width() + g.slot] = 1.0;
  return v;
}

Eigen::VectorXd EncodedStep::dense_courses(const EncodingDims& dims) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dims.course_count);
  for (int c : next_courses) v[c] = 1.0;
  return v;
}

Eigen::VectorXd EncodedStep::dense_target(const EncodingDims& dims) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dims.grade_width());
  for (const auto& t : targets) v[t.course * dims.label_width() + t.slot] = 1.0;
  return v;
}

Eigen::VectorXd EncodedStep::dense_mask(const EncodingDims& dims) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dims.course_count);
  for (const auto& t : targets) v[t.course] = 1.0;
  return v;
}

EncodedSequence encode_student(const Student& student, const CohortDataset& dataset,
                               const FeatureSpec& features, int term_limit) {
  if (student.terms.empty())
    throw InternalError("cannot encode a student with no enrollments");
  if (term_limit < 0) term_limit = dataset.term_count;
  const int m = dataset.scale.size();

  EncodedSequence seq;
  seq.student_id = student.demographics.student_id;
  seq.race_index = student.race_index;
  seq.attributes = features.encode(student);

  // Per-term course lists over the student's enrolled span.
  const int first = student.terms.front().term;
  const int last = std::min(student.terms.back().term, term_limit - 1);

  auto term_record = [&](int term) -> const TermRecord* {
    for (const auto& tr : student.terms)
      if (tr.term == term) return &tr;
    return nullptr;
  };

  for (int t = first; t < last; ++t) {
    EncodedStep step;
    step.input_term = t;
    step.target_term = t + 1;
    step.has_target_term = true;
    if (const TermRecord* in = term_record(t)) {
      for (const auto& [course, grade] : in->courses) {
        if (course < 0 || course >= dataset.course_count())
          throw InternalError("course index outside catalog during encoding");
        step.grades_in.push_back({course, label_slot(grade, m)});
      }
    }
    if (const TermRecord* out = term_record(t + 1)) {
      for (const auto& [course, grade] : out->courses) {
        step.next_courses.push_back(course);
        step.targets.push_back({course, label_slot(grade, m)});
      }
    }
    seq.steps.push_back(std::move(step));
  }

  if (seq.steps.empty()) {
    // Single-term history: keep the student as an input-only step.
    EncodedStep step;
    step.input_term = first;
    step.target_term = first + 1;
    step.has_target_term = false;
    if (const TermRecord* in = term_record(first))
      for (const auto& [course, grade] : in->courses)
        step.grades_in.push_back({course, label_slot(grade, m)});
    seq.steps.push_back(std::move(step));
  }
  return seq;
}

std::vector<TargetRef> Batch::targets() const {
  std::vector<TargetRef> out;
  for (int t = 0; t < max_steps; ++t) {
    for (int b = 0; b < size(); ++b) {
      const EncodedStep* s = step(t, b);
      if (s == nullptr) continue;
      for (const auto& cl : s->targets)
        out.push_back({t, b, cl.course, cl.slot, s->target_term,
                       sequences[b]->race_index});
    }
  }
  return out;
}

std::vector<Batch> make_batches(const std::vector<const EncodedSequence*>& sequences,
                                int max_batch) {
  if (max_batch < 1) throw ValidationError("max_batch must be >= 1");
  std::vector<Batch> out;
  for (std::size_t i = 0; i < sequences.size(); i += max_batch) {
    Batch b;
    for (std::size_t j = i; j < std::min(sequences.size(), i + max_batch); ++j) {
      b.sequences.push_back(sequences[j]);
      b.max_steps = std::max(b.max_steps, static_cast<int>(sequences[j]->steps.size()));
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<Batch> make_batches(const std::vector<EncodedSequence>& sequences,
                                int max_batch) {
  std::vector<const EncodedSequence*> ptrs;
  ptrs.reserve(sequences.size());
  for (const auto& s : sequences) ptrs.push_back(&s);
  return make_batches(ptrs, max_batch);
}

}  // namespace fairgrade
