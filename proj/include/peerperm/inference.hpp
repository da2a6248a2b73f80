#pragma once

// Randomization tests for group formation experiments.
//
// Under an SR design the exposure vector is uniform on an orbit of the
// attribute stabilizer, so the sharp null is tested by permuting the observed
// exposures within attribute strata. For a pairwise null H0: Y(c1) = Y(c2) the
// test conditions on the observed focal set and permutes exposures only among
// focal units that share an attribute value. CR designs are analyzed as the SR
// design fixed by the observed attribute-by-group tallies.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "peerperm/core_model.hpp"
#include "peerperm/designs.hpp"
#include "peerperm/statistics.hpp"

namespace peerperm {

enum class PValueEstimator { valid, unbiased };

/// Observed data of one experiment.
struct Experiment {
  AttributeVector attribute;
  GroupLabelAssignment labels;
  OutcomeVector outcomes;
  ExposureVector exposures;

  std::size_t size() const { return attribute.size(); }
};

/// Computes observed exposures from labels and attributes; when `coarsening`
/// is given the exposures of `kind` are relabelled through it.
Experiment make_experiment(AttributeVector attribute, GroupLabelAssignment labels, OutcomeVector outcomes,
                           ExposureKind kind, const CoarseningMap* coarsening = nullptr);

struct Contrast {
  Exposure c1;
  Exposure c2;
};

struct TestOptions {
  std::size_t permutations = 1000;
  std::uint64_t seed = 0;
  PValueEstimator estimator = PValueEstimator::valid;
  unsigned threads = 1;
  bool keep_draws = true;
};

struct TestResult {
  double statistic_obs = 0.0;
  double p_value = 1.0;
  std::vector<double> null_draws;
  std::size_t replicates = 0;
  PValueEstimator estimator = PValueEstimator::valid;
  Direction direction = Direction::two_sided;
  std::uint64_t seed = 0;
  std::size_t focal_c1 = 0;
  std::size_t focal_c2 = 0;
};

/// unbiased: mean 1{T >= T_obs}; valid: (1 + #{T >= T_obs}) / (L + 1).
/// two_sided compares absolute values. Ties use exact floating-point >=.
double mc_pvalue(double t_obs, std::span<const double> draws, PValueEstimator estimator, Direction direction);

/// Values of the vector whose stabilizer the permutations must respect: the
/// SR design's stratifier, or the attribute for CR designs. Validates that the
/// observed labels lie in the design's support and that an SR stratifier
/// refines the attribute.
AttributeVector permutation_stratifier(const Experiment& experiment, const Design& design);

TestResult test_sharp(const Experiment& experiment, const Design& design, const Contrast& contrast,
                      const TestStatisticSpec& spec, const TestOptions& options);

/// Conditional test of Y(c1) = Y(c2) on the observed focal units, optionally
/// restricted to units with attribute level `subgroup`.
TestResult test_pairwise(const Experiment& experiment, const Design& design, const Contrast& contrast,
                         const TestStatisticSpec& spec, const TestOptions& options,
                         std::optional<AttributeCode> subgroup = std::nullopt);

namespace detail {

/// Everything the conditional permutation loop needs, compacted to the units
/// entering the statistic.
struct ConditionalPlan {
  std::vector<int> units;
  std::vector<double> outcomes;
  std::vector<Arm> observed_arms;
  std::vector<std::vector<int>> strata;  // positions into `units`
  StatisticEvaluator evaluator;
  std::size_t count_c1 = 0;
  std::size_t count_c2 = 0;
};

ConditionalPlan make_conditional_plan(const Experiment& experiment, const Design& design, const Contrast& contrast,
                                      const TestStatisticSpec& spec, std::optional<AttributeCode> subgroup);

/// Arms of replicate `index`: observed arms permuted within each stratum using
/// the stream derive_seed(seed, {index}).
void draw_arms(const ConditionalPlan& plan, std::uint64_t seed, std::size_t index, std::span<Arm> out);

}  // namespace detail

}  // namespace peerperm
