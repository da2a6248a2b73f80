#include "peerperm/statistics.hpp"

#include <cmath>
#include <map>

#include "peerperm/error.hpp"

namespace peerperm {

std::vector<Arm> arms_from_exposures(const ExposureVector& w, const FocalSet& focal) {
  if (w.size() != focal.size()) throw ValidationError("exposure and focal set lengths differ");
  std::vector<Arm> arms(w.size(), kArmOut);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!focal.member[i]) continue;
    if (w[i] == focal.c1)
      arms[i] = kArmC1;
    else if (w[i] == focal.c2)
      arms[i] = kArmC2;
  }
  return arms;
}

double diff_in_means(std::span<const double> y, std::span<const Arm> arms) {
  double sum1 = 0.0, sum2 = 0.0;
  std::size_t n1 = 0, n2 = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (arms[i] == kArmC1) {
      sum1 += y[i];
      ++n1;
    } else if (arms[i] == kArmC2) {
      sum2 += y[i];
      ++n2;
    }
  }
  if (n1 == 0 || n2 == 0) throw ValidationError("empty exposure arm");
  return sum1 / static_cast<double>(n1) - sum2 / static_cast<double>(n2);
}

double diff_in_means(const ExposureVector& w, const OutcomeVector& y, const FocalSet& focal) {
  return diff_in_means(y.values(), arms_from_exposures(w, focal));
}

std::vector<double> level_shares(const AttributeVector& attribute) {
  std::vector<double> shares(attribute.alphabet_size(), 0.0);
  for (AttributeCode a : attribute.codes()) shares[static_cast<std::size_t>(a)] += 1.0;
  for (double& s : shares) s /= static_cast<double>(attribute.size());
  return shares;
}

double studentized_stat(std::span<const double> y, std::span<const Arm> arms, std::span<const AttributeCode> attribute,
                        std::span<const double> level_weights) {
  const std::size_t levels = level_weights.size();
  // Cells indexed [level][arm]; arm 0 = c2, 1 = c1.
  std::vector<double> sum(2 * levels, 0.0);
  std::vector<std::size_t> n(2 * levels, 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (arms[i] == kArmOut) continue;
    const std::size_t cell = static_cast<std::size_t>(attribute[i]) * 2 + static_cast<std::size_t>(arms[i]);
    sum[cell] += y[i];
    ++n[cell];
  }
  std::vector<double> mean(2 * levels, 0.0);
  for (std::size_t c = 0; c < mean.size(); ++c)
    if (n[c] > 0) mean[c] = sum[c] / static_cast<double>(n[c]);
  std::vector<double> ss(2 * levels, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (arms[i] == kArmOut) continue;
    const std::size_t cell = static_cast<std::size_t>(attribute[i]) * 2 + static_cast<std::size_t>(arms[i]);
    const double d = y[i] - mean[cell];
    ss[cell] += d * d;
  }
  double numerator = 0.0, variance = 0.0;
  bool any = false;
  for (std::size_t a = 0; a < levels; ++a) {
    const std::size_t c2 = 2 * a, c1 = 2 * a + 1;
    if (n[c1] + n[c2] == 0) continue;
    if (n[c1] < 2 || n[c2] < 2) throw ValidationError("degenerate stratum cell");
    any = true;
    const double w = level_weights[a];
    numerator += w * (mean[c1] - mean[c2]);
    const double v1 = ss[c1] / static_cast<double>(n[c1] - 1);
    const double v2 = ss[c2] / static_cast<double>(n[c2] - 1);
    variance += w * w * (v1 / static_cast<double>(n[c1]) + v2 / static_cast<double>(n[c2]));
  }
  if (!any) throw ValidationError("empty exposure arm");
  if (!(variance > 0.0)) throw ValidationError("zero denominator");
  return numerator / std::sqrt(variance);
}

double studentized_stat(const ExposureVector& w, const OutcomeVector& y, const AttributeVector& attribute,
                        const FocalSet& focal) {
  const auto shares = level_shares(attribute);
  return studentized_stat(y.values(), arms_from_exposures(w, focal), attribute.codes(), shares);
}

double stratified_diff(std::span<const double> y, std::span<const Arm> arms, std::span<const int> strata) {
  struct Cell {
    double sum1 = 0, sum2 = 0;
    std::size_t n1 = 0, n2 = 0;
  };
  std::map<int, Cell> cells;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (arms[i] == kArmOut) continue;
    auto& c = cells[strata[i]];
    if (arms[i] == kArmC1) {
      c.sum1 += y[i];
      ++c.n1;
    } else {
      c.sum2 += y[i];
      ++c.n2;
    }
  }
  double total = 0.0, weight = 0.0;
  for (const auto& [s, c] : cells) {
    if (c.n1 == 0 || c.n2 == 0) continue;
    const double w = static_cast<double>(c.n1 + c.n2);
    total += w * (c.sum1 / static_cast<double>(c.n1) - c.sum2 / static_cast<double>(c.n2));
    weight += w;
  }
  if (weight == 0.0) throw ValidationError("no stratum contains both exposure arms");
  return total / weight;
}

StatisticEvaluator::StatisticEvaluator(const TestStatisticSpec& spec, Context context)
    : kind_(spec.kind), context_(std::move(context)) {
  if (kind_ == StatisticKind::stratified_diff && context_.strata.empty())
    throw ValidationError("stratified statistic needs a strata column");
  if (kind_ == StatisticKind::residual_adjusted) {
    if (context_.covariates.empty()) throw ValidationError("residual-adjusted statistic needs covariates");
    const auto rows = static_cast<Eigen::Index>(context_.covariates.front().size());
    design_.resize(rows, static_cast<Eigen::Index>(context_.covariates.size()) + 1);
    design_.col(0).setOnes();
    for (std::size_t j = 0; j < context_.covariates.size(); ++j)
      for (Eigen::Index r = 0; r < rows; ++r)
        design_(r, static_cast<Eigen::Index>(j) + 1) = context_.covariates[j][static_cast<std::size_t>(r)];
    qr_.compute(design_);
    if (qr_.rank() < design_.cols()) throw ValidationError("covariate design matrix is rank deficient");
  }
}

StatisticEvaluator::Context StatisticEvaluator::restrict(const TestStatisticSpec& spec, const AttributeVector& attribute,
                                                         std::span<const int> units) {
  Context ctx;
  ctx.level_weights = level_shares(attribute);
  ctx.attribute.reserve(units.size());
  for (int u : units) ctx.attribute.push_back(attribute[static_cast<std::size_t>(u)]);
  if (!spec.strata.empty()) {
    if (spec.strata.size() != attribute.size()) throw ValidationError("strata column length differs from unit count");
    for (int u : units) ctx.strata.push_back(spec.strata[static_cast<std::size_t>(u)]);
  }
  for (const auto& column : spec.covariates) {
    if (column.size() != attribute.size()) throw ValidationError("covariate column length differs from unit count");
    std::vector<double> sub;
    sub.reserve(units.size());
    for (int u : units) sub.push_back(column[static_cast<std::size_t>(u)]);
    ctx.covariates.push_back(std::move(sub));
  }
  return ctx;
}

double StatisticEvaluator::operator()(std::span<const double> y, std::span<const Arm> arms) const {
  switch (kind_) {
    case StatisticKind::diff_in_means: return diff_in_means(y, arms);
    case StatisticKind::studentized: return studentized_stat(y, arms, context_.attribute, context_.level_weights);
    case StatisticKind::stratified_diff: return stratified_diff(y, arms, context_.strata);
    case StatisticKind::residual_adjusted: {
      Eigen::Map<const Eigen::VectorXd> outcome(y.data(), static_cast<Eigen::Index>(y.size()));
      const Eigen::VectorXd beta = qr_.solve(outcome);
      const Eigen::VectorXd residual = outcome - design_ * beta;
      return diff_in_means(std::span<const double>(residual.data(), y.size()), arms);
    }
  }
  throw ValidationError("unknown statistic kind");
}

}  // namespace peerperm
