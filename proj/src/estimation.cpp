#include "peerperm/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "peerperm/error.hpp"
#include "peerperm/parallel.hpp"

namespace peerperm {

ShiftGrid ShiftGrid::range(double lo, double hi, double step) {
  if (!(step > 0.0)) throw ValidationError("grid step must be positive");
  if (!(lo < hi)) throw ValidationError("grid needs lo < hi");
  ShiftGrid g;
  const double tolerance = 1e-9 * step;
  for (std::size_t i = 0;; ++i) {
    const double c = lo + static_cast<double>(i) * step;
    if (c > hi + tolerance) break;
    g.points.push_back(c);
  }
  return g;
}

ShiftGrid ShiftGrid::centered(double center, double half_width, std::size_t count) {
  if (count < 2) throw ValidationError("grid needs at least 2 points");
  if (!(half_width > 0.0)) throw ValidationError("grid half-width must be positive");
  ShiftGrid g;
  const double lo = center - half_width;
  const double step = 2.0 * half_width / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) g.points.push_back(lo + static_cast<double>(i) * step);
  return g;
}

ShiftGrid default_grid(const Experiment& experiment, const Contrast& contrast, std::optional<AttributeCode> subgroup) {
  FocalSet focal = focal_set(experiment.exposures, contrast.c1, contrast.c2);
  if (subgroup) focal = subgroup_restrict(focal, experiment.attribute, *subgroup);
  const auto arms = arms_from_exposures(experiment.exposures, focal);
  const auto y = experiment.outcomes.values();
  const double center = diff_in_means(y, arms);

  double sum[2] = {0, 0}, n[2] = {0, 0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (arms[i] == kArmOut) continue;
    sum[arms[i]] += y[i];
    n[arms[i]] += 1;
  }
  const double mean[2] = {sum[0] / n[0], sum[1] / n[1]};
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (arms[i] == kArmOut) continue;
    const double d = y[i] - mean[arms[i]];
    ss += d * d;
  }
  double se = 0.0;
  if (n[0] + n[1] > 2) se = std::sqrt(ss / (n[0] + n[1] - 2) * (1.0 / n[0] + 1.0 / n[1]));
  // Constant outcomes carry no scale; fall back to a unit half-width.
  const double half_width = se > 0.0 ? kDefaultGridHalfWidthSE * se : 1.0;
  return ShiftGrid::centered(center, half_width, kDefaultGridPoints);
}

PValueCurve shift_curve(const Experiment& experiment, const Design& design, const Contrast& contrast,
                        const ShiftGrid& grid, const TestStatisticSpec& spec, const TestOptions& options,
                        std::optional<AttributeCode> subgroup) {
  if (grid.points.empty()) throw ValidationError("empty shift grid");
  if (options.permutations == 0) throw ValidationError("number of permutations must be positive");
  const auto plan = detail::make_conditional_plan(experiment, design, contrast, spec, subgroup);
  const std::size_t n = plan.outcomes.size();
  const std::size_t points = grid.points.size();

  // Under H0(c) every focal unit's c2 outcome Y_i - c 1{W_i = c1} is known.
  // The statistic is evaluated on these adjusted outcomes, so its null
  // distribution is centered the same way at every c and |T| is a sensible
  // two-sided comparison.
  std::vector<std::vector<double>> adjusted(points, plan.outcomes);
  std::vector<double> t_obs(points);
  for (std::size_t g = 0; g < points; ++g) {
    for (std::size_t i = 0; i < n; ++i)
      if (plan.observed_arms[i] == kArmC1) adjusted[g][i] -= grid.points[g];
    t_obs[g] = plan.evaluator(adjusted[g], plan.observed_arms);
  }

  // draws[c * L + l]
  std::vector<double> draws(points * options.permutations);
  parallel_for(options.permutations, options.threads, [&](std::size_t l) {
    std::vector<Arm> arms(n);
    detail::draw_arms(plan, options.seed, l, arms);
    for (std::size_t g = 0; g < points; ++g) draws[g * options.permutations + l] = plan.evaluator(adjusted[g], arms);
  });

  PValueCurve curve(points);
  for (std::size_t g = 0; g < points; ++g) {
    const std::span<const double> row(draws.data() + g * options.permutations, options.permutations);
    curve[g] = {grid.points[g], mc_pvalue(t_obs[g], row, options.estimator, spec.direction)};
  }
  return curve;
}

double shift_test(const Experiment& experiment, const Design& design, const Contrast& contrast, double shift,
                  const TestStatisticSpec& spec, const TestOptions& options, std::optional<AttributeCode> subgroup) {
  ShiftGrid single{{shift}};
  return shift_curve(experiment, design, contrast, single, spec, options, subgroup).front().p_value;
}

double hl_estimate(const PValueCurve& curve) {
  if (curve.empty()) throw ValidationError("empty p-value curve");
  double best = curve.front().p_value;
  for (const auto& pt : curve) best = std::max(best, pt.p_value);
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& pt : curve) {
    if (pt.p_value != best) continue;
    if (first) {
      lo = hi = pt.shift;
      first = false;
    }
    lo = std::min(lo, pt.shift);
    hi = std::max(hi, pt.shift);
  }
  return 0.5 * (lo + hi);
}

ConfidenceInterval invert_ci(const PValueCurve& curve, double alpha) {
  if (curve.empty()) throw ValidationError("empty p-value curve");
  if (alpha < 0.0 || alpha >= 1.0) throw ValidationError("alpha must lie in [0, 1)");
  PValueCurve sorted = curve;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.shift < b.shift; });

  ConfidenceInterval ci;
  ci.level = 1.0 - alpha;
  ci.curve = curve;
  std::optional<std::size_t> first, last;
  std::size_t retained = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].p_value < alpha) continue;
    if (!first) first = i;
    last = i;
    ++retained;
  }
  if (!first) throw ValidationError("no c with p(c) >= alpha; widen grid or check model");
  ci.lower = sorted[*first].shift;
  ci.upper = sorted[*last].shift;
  ci.contiguous = retained == *last - *first + 1;
  ci.hl_estimate = hl_estimate(curve);
  return ci;
}

ConfidenceInterval weak_null_ci(const Experiment& experiment, const Design& design, const Contrast& contrast,
                                const ShiftGrid& grid, double alpha, const TestOptions& options,
                                std::optional<AttributeCode> subgroup) {
  TestStatisticSpec spec;
  spec.kind = StatisticKind::studentized;
  spec.direction = Direction::two_sided;
  return invert_ci(shift_curve(experiment, design, contrast, grid, spec, options, subgroup), alpha);
}

}  // namespace peerperm
