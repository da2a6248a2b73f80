#pragma once

// Hodges-Lehmann estimation and confidence intervals by inverting the
// conditional test of the constant-shift null Y_i(c1) - Y_i(c2) = c.

#include <optional>
#include <vector>

#include "peerperm/inference.hpp"

namespace peerperm {

/// Shift values at which p(c) is evaluated.
struct ShiftGrid {
  std::vector<double> points;

  /// lo, lo + step, ... up to hi (inclusive within a small tolerance).
  static ShiftGrid range(double lo, double hi, double step);
  /// `count` evenly spaced points on [center - half_width, center + half_width].
  static ShiftGrid centered(double center, double half_width, std::size_t count);
};

struct PValuePoint {
  double shift = 0.0;
  double p_value = 0.0;
};
using PValueCurve = std::vector<PValuePoint>;

struct ConfidenceInterval {
  double level = 0.95;
  double lower = 0.0;
  double upper = 0.0;
  double hl_estimate = 0.0;
  bool contiguous = true;
  PValueCurve curve;
};

/// Grid centered on the observed difference in means of the focal arms, with
/// half-width six pooled standard errors and 241 points.
ShiftGrid default_grid(const Experiment& experiment, const Contrast& contrast,
                       std::optional<AttributeCode> subgroup = std::nullopt);

inline constexpr std::size_t kDefaultGridPoints = 241;
inline constexpr double kDefaultGridHalfWidthSE = 6.0;

/// p-value of the shift null at c. The statistic is evaluated on the adjusted
/// outcomes Y_i - c 1{W_i = c1}, which the null fixes for every focal unit;
/// for diff-in-means the one-sided p equals that from imputing
/// Y_i + c (1{W'_i = c1} - 1{W_i = c1}) under each permuted assignment.
/// With c = 0 this equals test_pairwise with the same options.
double shift_test(const Experiment& experiment, const Design& design, const Contrast& contrast, double shift,
                  const TestStatisticSpec& spec, const TestOptions& options,
                  std::optional<AttributeCode> subgroup = std::nullopt);

/// p(c) over a grid. All grid points share the same permutations.
PValueCurve shift_curve(const Experiment& experiment, const Design& design, const Contrast& contrast,
                        const ShiftGrid& grid, const TestStatisticSpec& spec, const TestOptions& options,
                        std::optional<AttributeCode> subgroup = std::nullopt);

/// Argmax of p(c); ties resolve to the midpoint of the smallest and largest maximizer.
double hl_estimate(const PValueCurve& curve);

/// Bounds of {c : p(c) >= alpha}. Gaps in the retained set clear `contiguous`
/// but the bounds still span the whole set.
ConfidenceInterval invert_ci(const PValueCurve& curve, double alpha);

/// Interval for the average effect ave{Y(c1)} - ave{Y(c2)} from the
/// studentized statistic (two-sided).
ConfidenceInterval weak_null_ci(const Experiment& experiment, const Design& design, const Contrast& contrast,
                                const ShiftGrid& grid, double alpha, const TestOptions& options,
                                std::optional<AttributeCode> subgroup = std::nullopt);

}  // namespace peerperm
