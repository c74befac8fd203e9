#include "fairgrade/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fairgrade/errors.hpp"
#include "fairgrade/rng.hpp"

namespace fairgrade {

SynthConfig SynthConfig::defaults() {
  SynthConfig c;
  c.seed = 3;
  c.num_students = 3000;
  c.num_courses = 60;
  c.num_terms = 10;
  c.ability_strength = 0.15;
  c.affinity_skew = 0.0;

  // Group shares aggregate to 77.42% (top three), 17.03% (four
  // underrepresented groups), 5.55% (decline to state). The A-shares put
  // the overall A-category proportion at 56.12% of letter-graded
  // enrollments. Graduation rates are synthetic placeholders.
  auto mk = [](std::string name, double prop, double a, double b, double pass,
               double grad) {
    GroupModel g;
    g.name = std::move(name);
    g.proportion = prop;
    g.a_share = a;
    g.b_or_better = b;
    g.letter_share = 0.85;
    g.pass_share = pass;
    g.graduation_rate = grad;
    return g;
  };
  c.groups = {
      mk("White", 0.2800, 0.5865, 0.85, 0.925, 0.92),
      mk("Asian", 0.3600, 0.5865, 0.85, 0.925, 0.93),
      mk("International", 0.1342, 0.5865, 0.85, 0.925, 0.91),
      mk("Chicano/Latino", 0.1400, 0.4500, 0.78, 0.875, 0.81),
      mk("African American", 0.0250, 0.4500, 0.78, 0.875, 0.75),
      mk("Native American", 0.0033, 0.4500, 0.78, 0.875, 0.72),
      mk("Pacific Islander", 0.0020, 0.4500, 0.78, 0.875, 0.74),
      mk(kDeclineToState, 0.0555, 0.5500, 0.82, 0.900, 0.85),
  };
  return c;
}

void SynthConfig::validate() const {
  if (num_students <= 0 || num_courses <= 0 || num_terms <= 0)
    throw ValidationError("synth: sizes must be positive");
  if (groups.empty()) throw ValidationError("synth: at least one group required");
  if (min_stay_terms < 1 || max_stay_terms < min_stay_terms)
    throw ValidationError("synth: bad stay-term range");
  if (courses_per_term_weights.empty())
    throw ValidationError("synth: courses-per-term weights required");
  for (double w : courses_per_term_weights)
    if (w < 0.0) throw ValidationError("synth: negative courses-per-term weight");

  double total = 0.0;
  for (const auto& g : groups) {
    total += g.proportion;
    for (double p : {g.proportion, g.a_share, g.b_or_better, g.letter_share,
                     g.pass_share, g.graduation_rate})
      if (p < 0.0 || p > 1.0)
        throw ValidationError("synth: probability outside [0, 1] in group " + g.name);
    if (g.b_or_better < g.a_share)
      throw ValidationError("synth: b_or_better below a_share in group " + g.name);
    if (g.a_share - ability_strength < 0.0 ||
        g.b_or_better + ability_strength > 1.0)
      throw ValidationError("synth: ability_strength pushes grade probabilities out of "
                            "range for group " + g.name);
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("synth: group proportions must sum to 1");
  if (affinity_skew < 0.0) throw ValidationError("synth: affinity_skew must be >= 0");
}

std::vector<std::string> SynthConfig::group_names() const {
  std::vector<std::string> out;
  for (const auto& g : groups) out.push_back(g.name);
  return out;
}

std::vector<double> SynthConfig::graduation_rates() const {
  std::vector<double> out;
  for (const auto& g : groups) out.push_back(g.graduation_rate);
  return out;
}

namespace {

std::string padded_id(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, value);
  return buf;
}

GradeLabel sample_grade(Rng& rng, const GroupModel& g, double ability_shift,
                        const LetterScale& scale) {
  if (rng.uniform() >= g.letter_share)
    return rng.uniform() < g.pass_share ? GradeLabel::pass() : GradeLabel::no_pass();

  const double p_a = g.a_share + ability_shift;
  const double p_b = g.b_or_better - g.a_share;  // kept constant under ability
  const double u = rng.uniform();
  char category;
  if (u < p_a) {
    category = 'A';
  } else if (u < p_a + p_b) {
    category = 'B';
  } else {
    category = 'C';  // anything below B
  }

  std::vector<int> candidates;
  for (int i = 0; i < scale.size(); ++i) {
    const char c = scale.token(i)[0];
    const bool below_b = c != 'A' && c != 'B';
    if ((category == 'A' && c == 'A') || (category == 'B' && c == 'B') ||
        (category == 'C' && below_b))
      candidates.push_back(i);
  }
  if (candidates.empty()) candidates.push_back(scale.size() - 1);
  return GradeLabel::letter(candidates[rng.below(candidates.size())]);
}

}  // namespace

CohortDataset generate(const SynthConfig& config) {
  config.validate();
  const int n_groups = static_cast<int>(config.groups.size());

  std::vector<double> proportions;
  for (const auto& g : config.groups) proportions.push_back(g.proportion);

  const std::vector<std::string> genders = {"F", "M", "X"};
  const std::vector<std::string> incomes = {"low", "mid", "high"};
  const std::vector<std::string> entries = {"freshman", "transfer"};

  std::vector<Enrollment> enrollments;
  std::vector<StudentDemographics> demographics;
  const Rng base(config.seed);

  for (int s = 0; s < config.num_students; ++s) {
    Rng rng = base.derive(static_cast<std::uint64_t>(s));
    const int race = static_cast<int>(rng.categorical(proportions));
    const GroupModel& group = config.groups[race];
    const double ability = rng.uniform(-1.0, 1.0);
    const double ability_shift = config.ability_strength * ability;

    StudentDemographics d;
    d.student_id = padded_id("s", s, 6);
    d.race = group.name;
    d.gender = genders[rng.categorical({0.5, 0.45, 0.05})];
    d.income_bracket = incomes[rng.categorical({0.3, 0.45, 0.25})];
    d.entry_status = entries[rng.categorical({0.85, 0.15})];
    d.majors = {padded_id("maj", static_cast<int>(rng.below(12)), 2)};
    demographics.push_back(std::move(d));

    const int span = config.max_stay_terms - config.min_stay_terms + 1;
    int stay = config.min_stay_terms + static_cast<int>(rng.below(span));
    stay = std::min(stay, config.num_terms);
    const int start = static_cast<int>(rng.below(config.num_terms - stay + 1));

    // Group-specific course preference window covering half the catalog.
    std::vector<double> course_w(config.num_courses, 1.0);
    if (config.affinity_skew > 0.0) {
      const int window = std::max(1, config.num_courses / 2);
      const int offset = race * config.num_courses / n_groups;
      for (int k = 0; k < window; ++k)
        course_w[(offset + k) % config.num_courses] += config.affinity_skew;
    }

    for (int term = start; term < start + stay; ++term) {
      int k = static_cast<int>(rng.categorical(config.courses_per_term_weights)) + 1;
      k = std::min(k, config.num_courses);
      std::vector<double> w = course_w;
      for (int j = 0; j < k; ++j) {
        const int course = static_cast<int>(rng.categorical(w));
        w[course] = 0.0;  // without replacement
        Enrollment e;
        e.student_id = padded_id("s", s, 6);
        e.term = term;
        e.course_id = padded_id("c", course, 4);
        e.grade = sample_grade(rng, group, ability_shift, config.scale);
        enrollments.push_back(std::move(e));
      }
    }
  }

  DatasetOptions options;
  options.min_course_enrollments = 0;
  options.group_list = config.group_names();
  options.scale = config.scale;
  return build_dataset(enrollments, demographics, options);
}

namespace {
StatCheck make_check(const std::string& name, double target, std::int64_t num,
                     std::int64_t den, double tolerance) {
  StatCheck c;
  c.statistic = name;
  c.target = target;
  c.defined = den > 0;
  c.observed = c.defined ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  c.pass = c.defined && std::abs(c.observed - target) <= tolerance;
  return c;
}
}  // namespace

std::vector<StatCheck> verify_statistics(const CohortDataset& dataset,
                                         const SynthConfig& config, double tolerance) {
  const int n_groups = static_cast<int>(config.groups.size());
  std::vector<std::int64_t> enroll(n_groups, 0), letter(n_groups, 0), a_cat(n_groups, 0),
      pnp(n_groups, 0), pass(n_groups, 0);
  std::int64_t total = 0;

  for (const auto& s : dataset.students) {
    const int g = s.race_index;
    for (const auto& tr : s.terms) {
      for (const auto& [course, grade] : tr.courses) {
        ++total;
        if (g >= 0 && g < n_groups) {
          ++enroll[g];
          if (grade.is_letter()) {
            ++letter[g];
            if (dataset.scale.in_cutoff(grade.letter_index, 'A')) ++a_cat[g];
          } else {
            ++pnp[g];
            if (grade.kind == GradeLabel::Kind::Pass) ++pass[g];
          }
        }
      }
    }
  }

  std::vector<StatCheck> checks;
  std::int64_t letters_all = 0, a_all = 0;
  for (int g = 0; g < n_groups; ++g) {
    const auto& gm = config.groups[g];
    checks.push_back(make_check("enrollment_share/" + gm.name, gm.proportion,
                                enroll[g], total, tolerance));
    checks.push_back(make_check("a_share/" + gm.name, gm.a_share, a_cat[g], letter[g],
                                tolerance));
    checks.push_back(make_check("pass_share/" + gm.name, gm.pass_share, pass[g], pnp[g],
                                tolerance));
    letters_all += letter[g];
    a_all += a_cat[g];
  }

  double a_target = 0.0;
  for (const auto& gm : config.groups) a_target += gm.proportion * gm.a_share;
  checks.push_back(make_check("a_share/overall", a_target, a_all, letters_all, tolerance));
  return checks;
}

}  // namespace fairgrade
