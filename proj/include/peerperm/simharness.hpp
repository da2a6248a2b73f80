#pragma once

// Simulation studies: power of the conditional test, power gains from
// stratifying on a covariate, coverage of studentized test-inversion
// intervals, and rejection-sampling vs permutation timing.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "peerperm/designs.hpp"
#include "peerperm/inference.hpp"

namespace peerperm {

enum class OutcomeModel {
  /// Y(0) = 4 Beta(10, 3); Y(1) = min(Y(0) + tau, 4).
  beta_shift,
  /// Y(0) = 4 {(1 - X) Beta(10, 3) + X Beta(5, 5)}; Y(1) = min(Y(0) + tau, 4).
  beta_covariate,
};

struct SimConfig {
  /// Per group, the number of units with each attribute level (binary: {n_0, n_1}).
  std::vector<std::vector<long>> group_composition;
  OutcomeModel model = OutcomeModel::beta_shift;
  std::vector<double> taus;
  std::size_t replicates = 300;
  std::size_t permutations = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 20190917;
  unsigned threads = 0;
  /// Direction of the power and covariate tests; interval studies are two-sided.
  Direction direction = Direction::greater;

  /// 156 units in 39 groups of four, 104 with A = 1: 13 groups with four
  /// A = 1 units, 10 with three, 8 with two, 6 with one and 2 with none.
  static SimConfig application_shape();

  void validate() const;
  std::size_t num_units() const;
};

struct SimReport {
  std::string study;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, double>> summary;

  double value(std::size_t row, const std::string& column) const;
  double summary_value(const std::string& name) const;
};

/// Attribute vector of a configuration: units of level 0 first, then level 1.
AttributeVector simulation_attribute(const SimConfig& cfg);
/// SR design whose group tallies follow the configured composition.
SRDesign simulation_design(const SimConfig& cfg);
/// Binary covariate alternating within each attribute stratum (by unit order).
AttributeVector simulation_covariate(const SimConfig& cfg);
/// SR design on B = (A, X): within each attribute level, the group slots are
/// dealt covariate values alternately across groups in label order.
SRDesign simulation_covariate_design(const SimConfig& cfg);

/// Rejection rate of the test of Y(1) = Y(0) at level alpha, per tau.
SimReport power_study(const SimConfig& cfg);
/// Power when the design and permutations stratify on (A, X) vs on A alone.
SimReport covariate_gain_study(const SimConfig& cfg);
/// Coverage of the mean effect tau* by studentized intervals, their mean
/// length, and how often they exclude zero.
SimReport hl_coverage_study(const SimConfig& cfg);

struct TimingConfig {
  std::vector<std::size_t> group_counts{3, 4, 5, 6};
  std::size_t draws = 1000;
  std::size_t max_attempts = 10'000'000;
  std::uint64_t seed = 20190917;
};

/// Conditional draws for K groups of four under complete randomization:
/// rejection sampling from the design vs permuting within (A, U) strata.
SimReport timing_study(const TimingConfig& cfg);

/// Observed configuration of the timing study for K groups: units 4k..4k+3
/// form group k, which holds 2, 1, 3, 2, 1, 3, ... units with A = 1.
Experiment timing_experiment(std::size_t groups);

}  // namespace peerperm
