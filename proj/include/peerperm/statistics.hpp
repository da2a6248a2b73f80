#pragma once

// Test statistics contrasting two exposure arms among included units.
//
// Statistics are evaluated on an "arm vector": 1 for units exposed to c1,
// 0 for units exposed to c2, -1 for units that do not enter the statistic.
// Sums run in unit order so a statistic is a fixed function of (y, arms).

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "peerperm/core_model.hpp"

namespace peerperm {

enum class StatisticKind { diff_in_means, studentized, stratified_diff, residual_adjusted };
enum class Direction { greater, two_sided };

using Arm = std::int8_t;
inline constexpr Arm kArmC1 = 1;
inline constexpr Arm kArmC2 = 0;
inline constexpr Arm kArmOut = -1;

struct TestStatisticSpec {
  StatisticKind kind = StatisticKind::diff_in_means;
  Direction direction = Direction::two_sided;
  /// stratified_diff: one stratum code per unit (e.g. region).
  std::vector<int> strata;
  /// residual_adjusted: covariate columns, each with one value per unit.
  std::vector<std::vector<double>> covariates;
};

/// Arm vector for units in `focal`, using the exposures in `w`.
std::vector<Arm> arms_from_exposures(const ExposureVector& w, const FocalSet& focal);

/// mean(y | arm = c1) - mean(y | arm = c2). Throws "empty exposure arm".
double diff_in_means(std::span<const double> y, std::span<const Arm> arms);
double diff_in_means(const ExposureVector& w, const OutcomeVector& y, const FocalSet& focal);

/// Studentized attribute-stratified contrast:
///   sum_a pi_a (ybar_a1 - ybar_a2) / sqrt(sum_a pi_a^2 (s2_a1 / n_a1 + s2_a2 / n_a2))
/// over the attribute levels present among included units. `level_weights[a]`
/// is the share of all units carrying level a; s2 uses the n - 1 denominator.
double studentized_stat(std::span<const double> y, std::span<const Arm> arms, std::span<const AttributeCode> attribute,
                        std::span<const double> level_weights);
double studentized_stat(const ExposureVector& w, const OutcomeVector& y, const AttributeVector& attribute,
                        const FocalSet& focal);

/// Share of units carrying each level of the alphabet.
std::vector<double> level_shares(const AttributeVector& attribute);

/// Within-stratum differences in means, weighted by the number of included
/// units in each stratum. Strata missing either arm are skipped.
double stratified_diff(std::span<const double> y, std::span<const Arm> arms, std::span<const int> strata);

/// Evaluates a TestStatisticSpec over a fixed set of units (the rows of the
/// context). Residual adjustment regresses outcomes on an intercept plus the
/// covariates over all rows, then contrasts the residuals.
class StatisticEvaluator {
 public:
  struct Context {
    std::vector<AttributeCode> attribute;
    std::vector<double> level_weights;
    std::vector<int> strata;
    std::vector<std::vector<double>> covariates;  // columns
  };

  StatisticEvaluator(const TestStatisticSpec& spec, Context context);

  /// Context for the units listed in `units`, drawn from full-length columns.
  static Context restrict(const TestStatisticSpec& spec, const AttributeVector& attribute, std::span<const int> units);

  double operator()(std::span<const double> y, std::span<const Arm> arms) const;
  StatisticKind kind() const { return kind_; }

 private:
  StatisticKind kind_;
  Context context_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
  Eigen::MatrixXd design_;
};

}  // namespace peerperm
