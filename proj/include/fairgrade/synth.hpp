#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairgrade/cohort.hpp"

namespace fairgrade {

struct GroupModel {
  std::string name;
  double proportion = 0.0;       // share of students (hence enrollments)
  double a_share = 0.5;          // P(A category | letter graded)
  double b_or_better = 0.8;      // P(>= B | letter graded)
  double letter_share = 0.85;    // P(letter graded vs P/NP)
  double pass_share = 0.9;       // P(Pass | P/NP graded)
  double graduation_rate = 0.8;  // six-year rate, pure config
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int num_students = 1000;
  int num_courses = 50;
  int num_terms = 8;
  // Discrete distribution of courses taken per term; index i is the
  // unnormalized weight of taking i+1 courses. Default median is 4.
  std::vector<double> courses_per_term_weights = {0.05, 0.10, 0.20, 0.30, 0.20, 0.10, 0.05};
  int min_stay_terms = 4;
  int max_stay_terms = 12;
  std::vector<GroupModel> groups;
  // Concentration of group-specific course preference; 0 = course choice
  // independent of race.
  double affinity_skew = 0.0;
  // Half-width of the per-student latent ability shift applied to a_share
  // (ability uniform in [-1, 1] keeps group means exact).
  double ability_strength = 0.0;
  LetterScale scale;

  static SynthConfig defaults();
  void validate() const;
  std::vector<std::string> group_names() const;
  std::vector<double> graduation_rates() const;
};

CohortDataset generate(const SynthConfig& config);

struct StatCheck {
  std::string statistic;
  double target = 0.0;
  double observed = 0.0;
  bool defined = false;
  bool pass = false;
};

std::vector<StatCheck> verify_statistics(const CohortDataset& dataset,
                                         const SynthConfig& config, double tolerance);

}  // namespace fairgrade
