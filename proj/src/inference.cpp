#include "peerperm/inference.hpp"

#include <algorithm>
#include <cmath>

#include "peerperm/error.hpp"
#include "peerperm/parallel.hpp"
#include "peerperm/rng.hpp"
#include "peerperm/symmetry.hpp"

namespace peerperm {

Experiment make_experiment(AttributeVector attribute, GroupLabelAssignment labels, OutcomeVector outcomes,
                           ExposureKind kind, const CoarseningMap* coarsening) {
  if (labels.size() != attribute.size() || outcomes.size() != attribute.size())
    throw ValidationError("attribute, label and outcome vectors must have the same length");
  auto exposures = exposure_of(labels_to_assignment(labels), attribute, kind);
  if (coarsening) exposures = coarsen_exposure(exposures, *coarsening, attribute.levels());
  return Experiment{std::move(attribute), std::move(labels), std::move(outcomes), std::move(exposures)};
}

double mc_pvalue(double t_obs, std::span<const double> draws, PValueEstimator estimator, Direction direction) {
  if (draws.empty()) throw ValidationError("p-value needs at least one draw");
  const double reference = direction == Direction::two_sided ? std::abs(t_obs) : t_obs;
  std::size_t hits = 0;
  for (double t : draws) {
    const double v = direction == Direction::two_sided ? std::abs(t) : t;
    hits += v >= reference;
  }
  const auto n = static_cast<double>(draws.size());
  if (estimator == PValueEstimator::unbiased) return static_cast<double>(hits) / n;
  return (1.0 + static_cast<double>(hits)) / (n + 1.0);
}

AttributeVector permutation_stratifier(const Experiment& experiment, const Design& design) {
  if (!satisfies(design, experiment.labels))
    throw ValidationError("observed group labels are not in the support of the declared design");
  if (const auto* sr = std::get_if<SRDesign>(&design)) {
    const auto& strata = sr->strata();
    std::vector<int> attribute_of_level(strata.alphabet_size(), -1);
    for (std::size_t i = 0; i < strata.size(); ++i) {
      int& a = attribute_of_level[static_cast<std::size_t>(strata[i])];
      if (a == -1)
        a = experiment.attribute[i];
      else if (a != experiment.attribute[i])
        throw ValidationError("design stratifier does not refine the attribute");
    }
    return strata;
  }
  return experiment.attribute;
}

namespace {

std::vector<Arm> observed_arms_all(const Experiment& experiment, const Contrast& contrast) {
  std::vector<Arm> arms(experiment.size(), kArmOut);
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (experiment.exposures[i] == contrast.c1)
      arms[i] = kArmC1;
    else if (experiment.exposures[i] == contrast.c2)
      arms[i] = kArmC2;
  }
  return arms;
}

void count_arms(std::span<const Arm> arms, std::size_t& n1, std::size_t& n2) {
  n1 = static_cast<std::size_t>(std::count(arms.begin(), arms.end(), kArmC1));
  n2 = static_cast<std::size_t>(std::count(arms.begin(), arms.end(), kArmC2));
}

}  // namespace

TestResult test_sharp(const Experiment& experiment, const Design& design, const Contrast& contrast,
                      const TestStatisticSpec& spec, const TestOptions& options) {
  if (options.permutations == 0) throw ValidationError("number of permutations must be positive");
  const auto stratifier = permutation_stratifier(experiment, design);
  const auto strata = stabilizer_strata(stratifier);

  // Exposures as arm codes for every unit; permuting the full exposure vector
  // only moves these codes, so units outside {c1, c2} stay out by value.
  const auto observed = observed_arms_all(experiment, contrast);
  std::vector<int> all(experiment.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  const StatisticEvaluator evaluator(spec, StatisticEvaluator::restrict(spec, experiment.attribute, all));
  const auto y = experiment.outcomes.values();

  TestResult result;
  count_arms(observed, result.focal_c1, result.focal_c2);
  if (result.focal_c1 == 0 || result.focal_c2 == 0) throw ValidationError("empty exposure arm");
  result.statistic_obs = evaluator(y, observed);

  std::vector<double> draws(options.permutations);
  parallel_for(options.permutations, options.threads, [&](std::size_t l) {
    Rng rng(derive_seed(options.seed, {l}));
    std::vector<Arm> arms = observed;
    std::vector<Arm> buffer;
    for (const auto& s : strata.strata) {
      buffer.clear();
      for (int u : s) buffer.push_back(observed[static_cast<std::size_t>(u)]);
      shuffle(std::span<Arm>(buffer), rng);
      for (std::size_t j = 0; j < s.size(); ++j) arms[static_cast<std::size_t>(s[j])] = buffer[j];
    }
    draws[l] = evaluator(y, arms);
  });

  result.p_value = mc_pvalue(result.statistic_obs, draws, options.estimator, spec.direction);
  result.replicates = options.permutations;
  result.estimator = options.estimator;
  result.direction = spec.direction;
  result.seed = options.seed;
  if (options.keep_draws) result.null_draws = std::move(draws);
  return result;
}

namespace detail {

ConditionalPlan make_conditional_plan(const Experiment& experiment, const Design& design, const Contrast& contrast,
                                      const TestStatisticSpec& spec, std::optional<AttributeCode> subgroup) {
  const auto stratifier = permutation_stratifier(experiment, design);
  FocalSet focal = focal_set(experiment.exposures, contrast.c1, contrast.c2);
  if (subgroup) focal = subgroup_restrict(focal, experiment.attribute, *subgroup);

  std::vector<int> units = focal.indices();
  std::vector<double> outcomes;
  std::vector<Arm> arms;
  std::vector<AttributeCode> stratum_codes;
  for (int u : units) {
    const auto i = static_cast<std::size_t>(u);
    outcomes.push_back(experiment.outcomes[i]);
    arms.push_back(experiment.exposures[i] == contrast.c1 ? kArmC1 : kArmC2);
    stratum_codes.push_back(stratifier[i]);
  }
  // Every unit here is focal, so the joint (stratifier, U) strata reduce to
  // the stratifier's level sets among these units.
  auto strata = stabilizer_strata<AttributeCode>(stratum_codes).strata;

  StatisticEvaluator evaluator(spec, StatisticEvaluator::restrict(spec, experiment.attribute, units));
  ConditionalPlan plan{std::move(units), std::move(outcomes), std::move(arms), std::move(strata), std::move(evaluator),
                       0, 0};
  count_arms(plan.observed_arms, plan.count_c1, plan.count_c2);
  if (plan.count_c1 == 0 || plan.count_c2 == 0) throw ValidationError("empty exposure arm");
  return plan;
}

void draw_arms(const ConditionalPlan& plan, std::uint64_t seed, std::size_t index, std::span<Arm> out) {
  Rng rng(derive_seed(seed, {index}));
  std::vector<Arm> values;
  for (const auto& s : plan.strata) {
    values.clear();
    for (int pos : s) values.push_back(plan.observed_arms[static_cast<std::size_t>(pos)]);
    shuffle(std::span<Arm>(values), rng);
    for (std::size_t j = 0; j < s.size(); ++j) out[static_cast<std::size_t>(s[j])] = values[j];
  }
}

}  // namespace detail

TestResult test_pairwise(const Experiment& experiment, const Design& design, const Contrast& contrast,
                         const TestStatisticSpec& spec, const TestOptions& options,
                         std::optional<AttributeCode> subgroup) {
  if (options.permutations == 0) throw ValidationError("number of permutations must be positive");
  const auto plan = detail::make_conditional_plan(experiment, design, contrast, spec, subgroup);

  TestResult result;
  result.focal_c1 = plan.count_c1;
  result.focal_c2 = plan.count_c2;
  result.statistic_obs = plan.evaluator(plan.outcomes, plan.observed_arms);

  std::vector<double> draws(options.permutations);
  parallel_for(options.permutations, options.threads, [&](std::size_t l) {
    std::vector<Arm> arms(plan.observed_arms.size());
    detail::draw_arms(plan, options.seed, l, arms);
    draws[l] = plan.evaluator(plan.outcomes, arms);
  });

  result.p_value = mc_pvalue(result.statistic_obs, draws, options.estimator, spec.direction);
  result.replicates = options.permutations;
  result.estimator = options.estimator;
  result.direction = spec.direction;
  result.seed = options.seed;
  if (options.keep_draws) result.null_draws = std::move(draws);
  return result;
}

}  // namespace peerperm
