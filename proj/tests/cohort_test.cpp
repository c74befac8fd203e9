#include <doctest.h>

#include <sstream>

#include "fairgrade/cohort.hpp"
#include "fairgrade/synth.hpp"

using namespace fairgrade;

namespace {

const char* kEnrollmentsCsv =
    "student_id,term,course_id,grade\n"
    "s1,0,math1,A\n"
    "s1,0,chem1,B+\n"
    "s1,1,math2,P\n"
    "s2,0,math1,NP\n"
    "s2,1,chem1,F\n"
    "s2,2,math2,A-\n";

const char* kDemographicsCsv =
    "student_id,race,gender,income_bracket,entry_status,majors\n"
    "s1,White,F,low,freshman,bio;chem\n"
    "s2,Asian,M,high,transfer,\n";

CohortDataset small_dataset(int min_enrollments = 0) {
  std::istringstream enr(kEnrollmentsCsv);
  std::istringstream dem(kDemographicsCsv);
  DatasetOptions options;
  options.min_course_enrollments = min_enrollments;
  return build_dataset(parse_enrollments(enr, LetterScale()), parse_demographics(dem),
                       options);
}

}  // namespace

TEST_SUITE("cohort") {

TEST_CASE("default letter scale") {
  LetterScale scale;
  CHECK(scale.size() == 13);
  CHECK(scale.token(0) == "A+");
  CHECK(scale.token(12) == "F");
  CHECK(scale.index_of("A-") == 2);
  CHECK(scale.index_of("B") == 4);
  CHECK(!scale.index_of("E").has_value());
}

TEST_CASE("cutoff covers whole letter categories") {
  LetterScale scale;
  for (int i = 0; i < scale.size(); ++i) {
    const char head = scale.token(i)[0];
    CHECK(scale.in_cutoff(i, 'A') == (head == 'A'));
    CHECK(scale.in_cutoff(i, 'B') == (head == 'A' || head == 'B'));
  }
}

TEST_CASE("letter scale rejects duplicates and empties") {
  CHECK_THROWS_AS(LetterScale(std::vector<std::string>{}), ValidationError);
  CHECK_THROWS_AS(LetterScale({"A", "B", "A"}), ValidationError);
}

TEST_CASE("parse enrollments") {
  std::istringstream in(kEnrollmentsCsv);
  auto rows = parse_enrollments(in, LetterScale());
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].student_id == "s1");
  CHECK(rows[0].term == 0);
  CHECK(rows[0].course_id == "math1");
  CHECK(rows[0].grade == GradeLabel::letter(1));
  CHECK(rows[2].grade == GradeLabel::pass());
  CHECK(rows[3].grade == GradeLabel::no_pass());
  CHECK(rows[4].grade == GradeLabel::letter(12));
}

TEST_CASE("unknown grade token names the line") {
  std::istringstream in("student_id,term,course_id,grade\ns1,0,math1,Q\n");
  CHECK_THROWS_WITH_AS(parse_enrollments(in, LetterScale()),
                       "unknown grade token 'Q' at line 2", ParseError);
}

TEST_CASE("enrollment parse errors") {
  LetterScale scale;
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_enrollments(empty, scale), ParseError);

  std::istringstream bad_header("id,term,course,grade\n");
  CHECK_THROWS_AS(parse_enrollments(bad_header, scale), ParseError);

  std::istringstream bad_fields("student_id,term,course_id,grade\ns1,0,math1\n");
  CHECK_THROWS_AS(parse_enrollments(bad_fields, scale), ParseError);

  std::istringstream bad_term("student_id,term,course_id,grade\ns1,x,math1,A\n");
  CHECK_THROWS_AS(parse_enrollments(bad_term, scale), ParseError);

  std::istringstream dup(
      "student_id,term,course_id,grade\ns1,0,math1,A\ns1,0,math1,B\n");
  CHECK_THROWS_AS(parse_enrollments(dup, scale), ValidationError);
}

TEST_CASE("parse demographics") {
  std::istringstream in(kDemographicsCsv);
  auto rows = parse_demographics(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].race == "White");
  CHECK(rows[0].majors == std::vector<std::string>{"bio", "chem"});
  CHECK(rows[1].majors.empty());

  std::istringstream dup(
      "student_id,race,gender,income_bracket,entry_status,majors\n"
      "s1,White,F,low,freshman,\n"
      "s1,Asian,M,low,freshman,\n");
  CHECK_THROWS_AS(parse_demographics(dup), ValidationError);
}

TEST_CASE("build dataset") {
  CohortDataset ds = small_dataset();
  CHECK(ds.catalog == std::vector<std::string>{"math1", "chem1", "math2"});
  CHECK(ds.term_count == 3);
  REQUIRE(ds.students.size() == 2);
  CHECK(ds.students[0].race_index == 0);
  CHECK(ds.students[1].race_index == 1);
  REQUIRE(ds.students[0].terms.size() == 2);
  CHECK(ds.students[0].terms[0].term == 0);
  CHECK(ds.students[0].terms[0].courses.size() == 2);
  CHECK(ds.course_index("math2") == 2);
  CHECK(!ds.course_index("none").has_value());
}

TEST_CASE("course enrollment threshold filters rare courses") {
  // Every course has exactly 2 enrollments in the fixture.
  CHECK(small_dataset(2).course_count() == 3);
  CHECK_THROWS_WITH_AS(small_dataset(3), "empty dataset after course-enrollment filtering",
                       ValidationError);
}

TEST_CASE("raising the threshold never grows the catalog") {
  SynthConfig config = SynthConfig::defaults();
  config.num_students = 200;
  config.num_courses = 30;
  CohortDataset ds = generate(config);
  std::ostringstream enr, dem;
  write_enrollments(enr, ds);
  write_demographics(dem, ds);

  int prev = ds.course_count() + 1;
  for (int threshold : {0, 5, 20, 50}) {
    std::istringstream enr_in(enr.str()), dem_in(dem.str());
    DatasetOptions options;
    options.min_course_enrollments = threshold;
    CohortDataset filtered = build_dataset(parse_enrollments(enr_in, ds.scale),
                                           parse_demographics(dem_in), options);
    CHECK(filtered.course_count() <= prev);
    prev = filtered.course_count();
  }
}

TEST_CASE("missing demographics and unknown race are rejected") {
  std::istringstream enr(kEnrollmentsCsv);
  auto enrollments = parse_enrollments(enr, LetterScale());

  std::istringstream one(
      "student_id,race,gender,income_bracket,entry_status,majors\n"
      "s1,White,F,low,freshman,\n");
  CHECK_THROWS_AS(build_dataset(enrollments, parse_demographics(one), {}), ValidationError);

  std::istringstream bad_race(
      "student_id,race,gender,income_bracket,entry_status,majors\n"
      "s1,Martian,F,low,freshman,\n"
      "s2,Asian,M,high,transfer,\n");
  CHECK_THROWS_AS(build_dataset(enrollments, parse_demographics(bad_race), {}),
                  ValidationError);
}

TEST_CASE("round trip through csv") {
  SynthConfig config = SynthConfig::defaults();
  config.num_students = 150;
  config.num_courses = 15;
  CohortDataset ds = generate(config);

  std::ostringstream enr, dem;
  write_enrollments(enr, ds);
  write_demographics(dem, ds);
  std::istringstream enr_in(enr.str()), dem_in(dem.str());
  DatasetOptions options;
  options.min_course_enrollments = 0;
  CohortDataset back = build_dataset(parse_enrollments(enr_in, ds.scale),
                                     parse_demographics(dem_in), options);
  CHECK(back == ds);
}

TEST_CASE("chronological split takes trailing terms") {
  CohortDataset ds;
  ds.term_count = 15;
  SplitSpec s = chronological_split(ds);
  CHECK(s.test_terms == std::set<int>{14});
  CHECK(s.val_terms == std::set<int>{13});
  CHECK(s.train_terms.size() == 13);
  CHECK(*s.train_terms.begin() == 0);
  CHECK(*s.train_terms.rbegin() == 12);

  ds.term_count = 3;
  s = chronological_split(ds);
  CHECK(s.train_terms == std::set<int>{0});
  CHECK(s.val_terms == std::set<int>{1});
  CHECK(s.test_terms == std::set<int>{2});

  ds.term_count = 32;
  s = chronological_split(ds);
  CHECK(s.test_terms.size() == 2);
  CHECK(s.val_terms.size() == 2);
  CHECK(*s.test_terms.rbegin() == 31);

  ds.term_count = 2;
  CHECK_THROWS_AS(chronological_split(ds), ValidationError);
  ds.term_count = 15;
  CHECK_THROWS_AS(chronological_split(ds, 0, 1, 1), ValidationError);
}

}  // TEST_SUITE
