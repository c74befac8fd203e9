#include "fairgrade/cohort.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace fairgrade {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

LetterScale::LetterScale(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw ValidationError("letter scale must be non-empty");
  std::unordered_set<std::string> seen;
  for (const auto& t : tokens_) {
    if (!seen.insert(t).second)
      throw ValidationError("duplicate letter token '" + t + "'");
  }
}

std::vector<std::string> LetterScale::default_tokens() {
  return {"A+", "A", "A-", "B+", "B", "B-", "C+", "C", "C-", "D+", "D", "D-", "F"};
}

std::optional<int> LetterScale::index_of(const std::string& token) const {
  for (int i = 0; i < size(); ++i)
    if (tokens_[i] == token) return i;
  return std::nullopt;
}

bool LetterScale::in_cutoff(int index, char cutoff_letter) const {
  const std::string& t = tokens_.at(index);
  return !t.empty() && t[0] <= cutoff_letter;
}

std::vector<std::string> default_group_list() {
  return {"White", "Asian", "International", "Chicano/Latino", "African American",
          "Native American", "Pacific Islander", kDeclineToState};
}

std::optional<int> CohortDataset::course_index(const std::string& course_id) const {
  for (int i = 0; i < course_count(); ++i)
    if (catalog[i] == course_id) return i;
  return std::nullopt;
}

std::string grade_token(const GradeLabel& grade, const LetterScale& scale) {
  switch (grade.kind) {
    case GradeLabel::Kind::Pass: return "P";
    case GradeLabel::Kind::NoPass: return "NP";
    case GradeLabel::Kind::Letter: return scale.token(grade.letter_index);
  }
  return "?";
}

std::vector<Enrollment> parse_enrollments(std::istream& in, const LetterScale& scale) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("enrollments: empty input, expected header");
  if (strip_cr(line) != "student_id,term,course_id,grade")
    throw ParseError("enrollments: bad header '" + line + "'");

  std::vector<Enrollment> rows;
  std::set<std::tuple<std::string, int, std::string>> keys;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 4)
      throw ParseError("enrollments: expected 4 fields at line " + std::to_string(line_no));

    Enrollment e;
    e.student_id = fields[0];
    try {
      e.term = std::stoi(fields[1]);
    } catch (const std::exception&) {
      throw ParseError("enrollments: bad term '" + fields[1] + "' at line " +
                       std::to_string(line_no));
    }
    if (e.term < 0)
      throw ParseError("enrollments: negative term at line " + std::to_string(line_no));
    e.course_id = fields[2];

    const std::string& tok = fields[3];
    if (tok == "P") {
      e.grade = GradeLabel::pass();
    } else if (tok == "NP") {
      e.grade = GradeLabel::no_pass();
    } else if (auto idx = scale.index_of(tok)) {
      e.grade = GradeLabel::letter(*idx);
    } else {
      throw ParseError("unknown grade token '" + tok + "' at line " +
                       std::to_string(line_no));
    }

    if (!keys.insert({e.student_id, e.term, e.course_id}).second)
      throw ValidationError("duplicate enrollment (" + e.student_id + ", " +
                            std::to_string(e.term) + ", " + e.course_id + ") at line " +
                            std::to_string(line_no));
    rows.push_back(std::move(e));
  }
  return rows;
}

std::vector<StudentDemographics> parse_demographics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("demographics: empty input, expected header");
  if (strip_cr(line) != "student_id,race,gender,income_bracket,entry_status,majors")
    throw ParseError("demographics: bad header '" + line + "'");

  std::vector<StudentDemographics> rows;
  std::unordered_set<std::string> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 6)
      throw ParseError("demographics: expected 6 fields at line " + std::to_string(line_no));
    StudentDemographics d;
    d.student_id = fields[0];
    d.race = fields[1];
    d.gender = fields[2];
    d.income_bracket = fields[3];
    d.entry_status = fields[4];
    if (!fields[5].empty()) d.majors = split(fields[5], ';');
    if (!seen.insert(d.student_id).second)
      throw ValidationError("duplicate demographics record for student '" + d.student_id +
                            "' at line " + std::to_string(line_no));
    rows.push_back(std::move(d));
  }
  return rows;
}

CohortDataset build_dataset(const std::vector<Enrollment>& enrollments,
                            const std::vector<StudentDemographics>& demographics,
                            const DatasetOptions& options) {
  if (enrollments.empty()) throw ValidationError("empty dataset");
  if (options.min_course_enrollments < 0)
    throw ValidationError("min_course_enrollments must be >= 0");

  std::unordered_map<std::string, int> course_totals;
  for (const auto& e : enrollments) course_totals[e.course_id]++;

  CohortDataset ds;
  ds.group_list = options.group_list;
  ds.scale = options.scale;

  std::unordered_map<std::string, int> course_pos;
  std::unordered_map<std::string, int> student_pos;
  std::unordered_map<std::string, const StudentDemographics*> demo_by_id;
  for (const auto& d : demographics) demo_by_id[d.student_id] = &d;

  std::unordered_map<std::string, int> race_pos;
  for (int i = 0; i < static_cast<int>(ds.group_list.size()); ++i)
    race_pos[ds.group_list[i]] = i;

  // Per-student term -> courses, filled in input order.
  std::vector<std::map<int, std::vector<std::pair<int, GradeLabel>>>> by_term;

  for (const auto& e : enrollments) {
    if (course_totals[e.course_id] < options.min_course_enrollments) continue;

    auto cit = course_pos.find(e.course_id);
    int cidx;
    if (cit == course_pos.end()) {
      cidx = static_cast<int>(ds.catalog.size());
      course_pos[e.course_id] = cidx;
      ds.catalog.push_back(e.course_id);
    } else {
      cidx = cit->second;
    }

    auto sit = student_pos.find(e.student_id);
    int sidx;
    if (sit == student_pos.end()) {
      auto dit = demo_by_id.find(e.student_id);
      if (dit == demo_by_id.end())
        throw ValidationError("student '" + e.student_id + "' has no demographics record");
      auto rit = race_pos.find(dit->second->race);
      if (rit == race_pos.end())
        throw ValidationError("student '" + e.student_id + "' has race '" +
                              dit->second->race + "' outside the configured group list");
      sidx = static_cast<int>(ds.students.size());
      student_pos[e.student_id] = sidx;
      Student s;
      s.demographics = *dit->second;
      s.race_index = rit->second;
      ds.students.push_back(std::move(s));
      by_term.emplace_back();
    } else {
      sidx = sit->second;
    }

    by_term[sidx][e.term].emplace_back(cidx, e.grade);
    ds.term_count = std::max(ds.term_count, e.term + 1);
  }

  if (ds.students.empty())
    throw ValidationError("empty dataset after course-enrollment filtering");

  for (std::size_t s = 0; s < ds.students.size(); ++s) {
    for (auto& [term, courses] : by_term[s])
      ds.students[s].terms.push_back({term, std::move(courses)});
  }
  return ds;
}

void write_enrollments(std::ostream& out, const CohortDataset& dataset) {
  out << "student_id,term,course_id,grade\n";
  for (const auto& s : dataset.students)
    for (const auto& tr : s.terms)
      for (const auto& [cidx, grade] : tr.courses)
        out << s.demographics.student_id << ',' << tr.term << ','
            << dataset.catalog[cidx] << ',' << grade_token(grade, dataset.scale) << '\n';
}

void write_demographics(std::ostream& out, const CohortDataset& dataset) {
  out << "student_id,race,gender,income_bracket,entry_status,majors\n";
  for (const auto& s : dataset.students) {
    const auto& d = s.demographics;
    out << d.student_id << ',' << d.race << ',' << d.gender << ',' << d.income_bracket
        << ',' << d.entry_status << ',';
    for (std::size_t i = 0; i < d.majors.size(); ++i) {
      if (i) out << ';';
      out << d.majors[i];
    }
    out << '\n';
  }
}

CohortDataset load_dataset_dir(const std::string& dir, const DatasetOptions& options) {
  std::ifstream enr(dir + "/enrollments.csv");
  if (!enr) throw ParseError("cannot open " + dir + "/enrollments.csv");
  std::ifstream dem(dir + "/demographics.csv");
  if (!dem) throw ParseError("cannot open " + dir + "/demographics.csv");
  auto enrollments = parse_enrollments(enr, options.scale);
  auto demographics = parse_demographics(dem);
  return build_dataset(enrollments, demographics, options);
}

void write_dataset_dir(const std::string& dir, const CohortDataset& dataset) {
  std::filesystem::create_directories(dir);
  std::ofstream enr(dir + "/enrollments.csv");
  write_enrollments(enr, dataset);
  std::ofstream dem(dir + "/demographics.csv");
  write_demographics(dem, dataset);
}

SplitSpec chronological_split(const CohortDataset& dataset,
                              int ratio_train, int ratio_val, int ratio_test) {
  const int t = dataset.term_count;
  if (t < 3) throw ValidationError("chronological split needs at least 3 terms");
  const int total = ratio_train + ratio_val + ratio_test;
  if (ratio_train <= 0 || ratio_val <= 0 || ratio_test <= 0)
    throw ValidationError("split ratios must be positive");

  const int n_test = std::max(1, t * ratio_test / total);
  const int n_val = std::max(1, t * ratio_val / total);
  if (n_test + n_val >= t) throw ValidationError("split leaves no training terms");

  SplitSpec spec;
  for (int i = 0; i < t - n_val - n_test; ++i) spec.train_terms.insert(i);
  for (int i = t - n_val - n_test; i < t - n_test; ++i) spec.val_terms.insert(i);
  for (int i = t - n_test; i < t; ++i) spec.test_terms.insert(i);
  return spec;
}

}  // namespace fairgrade
