#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "fairgrade/synth.hpp"

using namespace fairgrade;
using doctest::Approx;

namespace {

double check_value(const std::vector<StatCheck>& checks, const std::string& name) {
  for (const auto& c : checks)
    if (c.statistic == name) return c.observed;
  FAIL("missing statistic ", name);
  return 0.0;
}

// Share of each group's enrollments landing in the first half of the catalog,
// keyed by race index. Course ids are zero-padded numerics, so catalog order
// follows the numeric course index.
std::map<int, double> first_half_share(const CohortDataset& ds, int num_courses) {
  std::map<int, std::int64_t> lo, total;
  for (const auto& s : ds.students)
    for (const auto& tr : s.terms)
      for (const auto& [course, grade] : tr.courses) {
        const int numeric = std::stoi(ds.catalog[course].substr(1));
        ++total[s.race_index];
        if (numeric < num_courses / 2) ++lo[s.race_index];
      }
  std::map<int, double> out;
  for (const auto& [race, n] : total)
    out[race] = static_cast<double>(lo[race]) / static_cast<double>(n);
  return out;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("defaults validate and aggregate as documented") {
  SynthConfig c = SynthConfig::defaults();
  c.validate();
  REQUIRE(c.groups.size() == 8);

  double top3 = 0.0, under = 0.0, overall_a = 0.0, total = 0.0;
  for (std::size_t g = 0; g < c.groups.size(); ++g) {
    total += c.groups[g].proportion;
    overall_a += c.groups[g].proportion * c.groups[g].a_share;
    if (g < 3) top3 += c.groups[g].proportion;
    if (g >= 3 && g < 7) under += c.groups[g].proportion;
  }
  CHECK(total == Approx(1.0).epsilon(1e-12));
  CHECK(top3 == Approx(0.7742).epsilon(1e-12));
  CHECK(under == Approx(0.1703).epsilon(1e-12));
  CHECK(c.groups.back().proportion == Approx(0.0555).epsilon(1e-12));
  CHECK(overall_a == Approx(0.5612).epsilon(1e-3));
}

TEST_CASE("config validation rejects inconsistent settings") {
  SynthConfig c = SynthConfig::defaults();
  c.groups[0].proportion += 0.1;
  CHECK_THROWS_AS(c.validate(), ValidationError);

  c = SynthConfig::defaults();
  c.ability_strength = 0.5;  // pushes a_share + shift past b_or_better's headroom
  CHECK_THROWS_AS(c.validate(), ValidationError);

  c = SynthConfig::defaults();
  c.groups[1].b_or_better = c.groups[1].a_share - 0.01;
  CHECK_THROWS_AS(c.validate(), ValidationError);

  c = SynthConfig::defaults();
  c.min_stay_terms = 5;
  c.max_stay_terms = 4;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("generation is deterministic per seed") {
  SynthConfig c = SynthConfig::defaults();
  c.num_students = 400;
  CohortDataset a = generate(c);
  CohortDataset b = generate(c);
  CHECK(a == b);

  std::ostringstream wa, wb;
  write_enrollments(wa, a);
  write_enrollments(wb, b);
  CHECK(wa.str() == wb.str());

  c.seed = 2;
  CohortDataset other = generate(c);
  CHECK(!(other == a));
}

TEST_CASE("large cohort matches the configured marginals") {
  SynthConfig c = SynthConfig::defaults();  // ~100k enrollments
  CohortDataset ds = generate(c);

  std::int64_t enrollments = 0;
  for (const auto& s : ds.students)
    for (const auto& tr : s.terms) enrollments += static_cast<std::int64_t>(tr.courses.size());
  CHECK(enrollments > 60000);

  auto checks = verify_statistics(ds, c, 0.01);

  double top3 = 0.0, under = 0.0;
  top3 += check_value(checks, "enrollment_share/White");
  top3 += check_value(checks, "enrollment_share/Asian");
  top3 += check_value(checks, "enrollment_share/International");
  under += check_value(checks, "enrollment_share/Chicano/Latino");
  under += check_value(checks, "enrollment_share/African American");
  under += check_value(checks, "enrollment_share/Native American");
  under += check_value(checks, "enrollment_share/Pacific Islander");
  const double decline = check_value(checks, "enrollment_share/Decline-to-State");

  CHECK(std::abs(top3 - 0.7742) <= 0.01);
  CHECK(std::abs(under - 0.1703) <= 0.01);
  CHECK(std::abs(decline - 0.0555) <= 0.01);
  CHECK(std::abs(check_value(checks, "a_share/overall") - 0.5612) <= 0.01);

  // The well-populated groups also hit their per-group targets.
  for (const char* name : {"White", "Asian", "International", "Chicano/Latino"}) {
    const std::string group(name);
    CHECK(std::abs(check_value(checks, "a_share/" + group) -
                   (group == "Chicano/Latino" ? 0.45 : 0.5865)) <= 0.01);
    CHECK(std::abs(check_value(checks, "pass_share/" + group) -
                   (group == "Chicano/Latino" ? 0.875 : 0.925)) <= 0.015);
  }
}

TEST_CASE("verify_statistics flags a moved target") {
  SynthConfig c = SynthConfig::defaults();
  c.num_students = 1500;
  CohortDataset ds = generate(c);

  auto honest = verify_statistics(ds, c, 0.02);
  bool white_pass = false;
  for (const auto& chk : honest)
    if (chk.statistic == "a_share/White") white_pass = chk.pass;
  CHECK(white_pass);

  SynthConfig tampered = c;
  tampered.groups[0].a_share = 0.30;
  auto flagged = verify_statistics(ds, tampered, 0.02);
  for (const auto& chk : flagged)
    if (chk.statistic == "a_share/White") CHECK(!chk.pass);

  // Undefined statistics (no support) are marked, not failed.
  SynthConfig no_pnp = c;
  for (auto& g : no_pnp.groups) g.letter_share = 1.0;
  no_pnp.num_students = 200;
  CohortDataset letters_only = generate(no_pnp);
  for (const auto& chk : verify_statistics(letters_only, no_pnp, 0.02))
    if (chk.statistic.rfind("pass_share/", 0) == 0) CHECK(!chk.defined);
}

TEST_CASE("zero affinity skew keeps course choice independent of race") {
  SynthConfig c = SynthConfig::defaults();
  c.num_students = 4000;
  c.num_courses = 20;
  CohortDataset ds = generate(c);

  // Race index 0..2 are the large groups; their first-half shares should
  // all sit near one half.
  auto shares = first_half_share(ds, c.num_courses);
  for (int race : {0, 1, 2}) {
    REQUIRE(shares.count(race));
    CHECK(std::abs(shares[race] - 0.5) < 0.02);
  }

  SynthConfig skewed = c;
  skewed.affinity_skew = 4.0;
  auto skew_shares = first_half_share(generate(skewed), c.num_courses);
  double spread = 0.0;
  for (int race : {0, 1, 2})
    for (int other : {0, 1, 2})
      spread = std::max(spread, std::abs(skew_shares[race] - skew_shares[other]));
  CHECK(spread > 0.1);
}

TEST_CASE("group helpers expose names and graduation rates in order") {
  SynthConfig c = SynthConfig::defaults();
  auto names = c.group_names();
  REQUIRE(names.size() == 8);
  CHECK(names.front() == "White");
  CHECK(names.back() == kDeclineToState);
  auto rates = c.graduation_rates();
  CHECK(rates[0] == 0.92);
  CHECK(rates[5] == 0.72);
}

}  // TEST_SUITE
