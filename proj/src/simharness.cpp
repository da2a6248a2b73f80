#include "peerperm/simharness.hpp"

#include <algorithm>
#include <boost/random/beta_distribution.hpp>
#include <chrono>
#include <cmath>

#include "peerperm/error.hpp"
#include "peerperm/estimation.hpp"
#include "peerperm/oracle.hpp"
#include "peerperm/parallel.hpp"
#include "peerperm/symmetry.hpp"

namespace peerperm {

namespace {

// Stream tags for derive_seed.
enum : std::uint64_t { kScheduleStream = 1, kAssignmentStream = 2, kPermutationStream = 3, kTimingStream = 4 };

const Contrast kOneVsZero{Exposure::count(1), Exposure::count(0)};

struct Schedule {
  std::vector<double> control;
  std::vector<double> treated;
};

Schedule draw_schedule(const SimConfig& cfg, std::span<const AttributeCode> covariate, double tau, std::size_t index) {
  Rng rng(derive_seed(cfg.seed, {kScheduleStream, index}));
  boost::random::beta_distribution<double> high(10.0, 3.0);
  boost::random::beta_distribution<double> mid(5.0, 5.0);
  const std::size_t n = cfg.num_units();
  Schedule s{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const bool x = cfg.model == OutcomeModel::beta_covariate && covariate[i] == 1;
    s.control[i] = 4.0 * (x ? mid(rng) : high(rng));
    s.treated[i] = std::min(s.control[i] + tau, 4.0);
  }
  return s;
}

Experiment observe(const AttributeVector& attribute, GroupLabelAssignment labels, const Schedule& schedule) {
  auto exposures = exposure_from_labels(labels, attribute, ExposureKind::count);
  std::vector<double> y(attribute.size());
  // Only exposures 0 and 1 enter the contrast; other units report Y(0).
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = exposures[i] == Exposure::count(1) ? schedule.treated[i] : schedule.control[i];
  return Experiment{attribute, std::move(labels), OutcomeVector(std::move(y)), std::move(exposures)};
}

double mc_se(double rate, std::size_t r) { return std::sqrt(rate * (1.0 - rate) / static_cast<double>(r)); }

}  // namespace

SimConfig SimConfig::application_shape() {
  SimConfig cfg;
  auto add = [&](long ones, int groups) {
    for (int g = 0; g < groups; ++g) cfg.group_composition.push_back({4 - ones, ones});
  };
  add(4, 13);
  add(3, 10);
  add(2, 8);
  add(1, 6);
  add(0, 2);
  cfg.taus = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0};
  return cfg;
}

std::size_t SimConfig::num_units() const {
  std::size_t n = 0;
  for (const auto& g : group_composition)
    for (long c : g) n += static_cast<std::size_t>(c);
  return n;
}

void SimConfig::validate() const {
  if (group_composition.empty()) throw ValidationError("simulation needs at least one group");
  for (const auto& g : group_composition) {
    if (g.size() != 2) throw ValidationError("simulation groups need counts for a binary attribute");
    if (g[0] < 0 || g[1] < 0) throw ValidationError("group counts must be nonnegative");
  }
  if (taus.empty()) throw ValidationError("tau grid is empty");
  if (replicates == 0 || permutations == 0) throw ValidationError("replicate counts must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
}

double SimReport::value(std::size_t row, const std::string& column) const {
  auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) throw ValidationError("no column '" + column + "' in " + study + " report");
  return rows.at(row).at(static_cast<std::size_t>(it - columns.begin()));
}

double SimReport::summary_value(const std::string& name) const {
  for (const auto& [k, v] : summary)
    if (k == name) return v;
  throw ValidationError("no summary value '" + name + "' in " + study + " report");
}

AttributeVector simulation_attribute(const SimConfig& cfg) {
  long zeros = 0, ones = 0;
  for (const auto& g : cfg.group_composition) {
    zeros += g[0];
    ones += g[1];
  }
  std::vector<AttributeCode> codes(static_cast<std::size_t>(zeros), 0);
  codes.insert(codes.end(), static_cast<std::size_t>(ones), 1);
  return AttributeVector::binary(std::move(codes));
}

SRDesign simulation_design(const SimConfig& cfg) {
  std::vector<std::vector<long>> counts(2, std::vector<long>(cfg.group_composition.size()));
  for (std::size_t k = 0; k < cfg.group_composition.size(); ++k) {
    counts[0][k] = cfg.group_composition[k][0];
    counts[1][k] = cfg.group_composition[k][1];
  }
  return SRDesign(simulation_attribute(cfg), std::move(counts));
}

AttributeVector simulation_covariate(const SimConfig& cfg) {
  const auto attribute = simulation_attribute(cfg);
  std::vector<AttributeCode> x(attribute.size());
  std::size_t rank[2] = {0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<AttributeCode>(rank[attribute[i]]++ % 2);
  return AttributeVector::binary(std::move(x));
}

SRDesign simulation_covariate_design(const SimConfig& cfg) {
  const auto b = constructed_covariate(simulation_attribute(cfg), simulation_covariate(cfg));
  const std::size_t k_groups = cfg.group_composition.size();
  // Level code of (a, x) is 2a + x.
  std::vector<std::vector<long>> counts(4, std::vector<long>(k_groups, 0));
  std::size_t slot[2] = {0, 0};
  for (std::size_t k = 0; k < k_groups; ++k) {
    for (std::size_t a = 0; a < 2; ++a) {
      for (long j = 0; j < cfg.group_composition[k][a]; ++j) ++counts[2 * a + slot[a]++ % 2][k];
    }
  }
  return SRDesign(b, std::move(counts));
}

SimReport power_study(const SimConfig& cfg) {
  cfg.validate();
  const auto attribute = simulation_attribute(cfg);
  const Design design = simulation_design(cfg);
  TestStatisticSpec spec;
  spec.direction = cfg.direction;

  SimReport report{"power", {"tau", "rejection_rate", "mc_se"}, {}, {}};
  for (std::size_t t = 0; t < cfg.taus.size(); ++t) {
    const auto schedule = draw_schedule(cfg, {}, cfg.taus[t], t);
    std::vector<char> reject(cfg.replicates, 0);
    parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
      Rng rng(derive_seed(cfg.seed, {kAssignmentStream, t, r}));
      const auto experiment = observe(attribute, sample(design, rng), schedule);
      TestOptions options;
      options.permutations = cfg.permutations;
      options.seed = derive_seed(cfg.seed, {kPermutationStream, t, r});
      options.keep_draws = false;
      reject[r] = test_pairwise(experiment, design, kOneVsZero, spec, options).p_value <= cfg.alpha;
    });
    const double rate =
        static_cast<double>(std::count(reject.begin(), reject.end(), 1)) / static_cast<double>(cfg.replicates);
    report.rows.push_back({cfg.taus[t], rate, mc_se(rate, cfg.replicates)});
  }
  return report;
}

SimReport covariate_gain_study(const SimConfig& cfg) {
  cfg.validate();
  const auto attribute = simulation_attribute(cfg);
  const auto covariate = simulation_covariate(cfg);
  const Design stratified = simulation_covariate_design(cfg);
  const Design attribute_only = simulation_design(cfg);
  TestStatisticSpec spec;
  spec.direction = cfg.direction;

  SimReport report{"covariate",
                   {"tau", "power_stratified", "mc_se_stratified", "power_attribute_only", "mc_se_attribute_only"},
                   {},
                   {}};
  for (std::size_t t = 0; t < cfg.taus.size(); ++t) {
    const auto schedule = draw_schedule(cfg, covariate.codes(), cfg.taus[t], t);
    std::vector<char> reject_b(cfg.replicates, 0), reject_a(cfg.replicates, 0);
    parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
      TestOptions options;
      options.permutations = cfg.permutations;
      options.seed = derive_seed(cfg.seed, {kPermutationStream, t, r});
      options.keep_draws = false;
      const std::uint64_t assignment_seed = derive_seed(cfg.seed, {kAssignmentStream, t, r});
      {
        Rng rng(assignment_seed);
        const auto experiment = observe(attribute, sample(stratified, rng), schedule);
        reject_b[r] = test_pairwise(experiment, stratified, kOneVsZero, spec, options).p_value <= cfg.alpha;
      }
      {
        Rng rng(assignment_seed);
        const auto experiment = observe(attribute, sample(attribute_only, rng), schedule);
        reject_a[r] = test_pairwise(experiment, attribute_only, kOneVsZero, spec, options).p_value <= cfg.alpha;
      }
    });
    const auto rate = [&](const std::vector<char>& v) {
      return static_cast<double>(std::count(v.begin(), v.end(), 1)) / static_cast<double>(cfg.replicates);
    };
    const double pb = rate(reject_b), pa = rate(reject_a);
    report.rows.push_back({cfg.taus[t], pb, mc_se(pb, cfg.replicates), pa, mc_se(pa, cfg.replicates)});
  }
  return report;
}

SimReport hl_coverage_study(const SimConfig& cfg) {
  cfg.validate();
  const auto attribute = simulation_attribute(cfg);
  const Design design = simulation_design(cfg);

  SimReport report{"coverage",
                   {"tau", "tau_star", "coverage", "coverage_mc_se", "mean_length", "power", "power_mc_se"},
                   {},
                   {}};
  for (std::size_t t = 0; t < cfg.taus.size(); ++t) {
    const auto schedule = draw_schedule(cfg, {}, cfg.taus[t], t);
    double tau_star = 0.0;
    for (std::size_t i = 0; i < schedule.control.size(); ++i) tau_star += schedule.treated[i] - schedule.control[i];
    tau_star /= static_cast<double>(schedule.control.size());

    std::vector<char> covered(cfg.replicates, 0), excludes_zero(cfg.replicates, 0);
    std::vector<double> length(cfg.replicates, 0.0);
    parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
      Rng rng(derive_seed(cfg.seed, {kAssignmentStream, t, r}));
      const auto experiment = observe(attribute, sample(design, rng), schedule);
      TestOptions options;
      options.permutations = cfg.permutations;
      options.seed = derive_seed(cfg.seed, {kPermutationStream, t, r});
      options.keep_draws = false;
      const auto ci = weak_null_ci(experiment, design, kOneVsZero, default_grid(experiment, kOneVsZero), cfg.alpha,
                                   options);
      covered[r] = ci.lower <= tau_star && tau_star <= ci.upper;
      excludes_zero[r] = 0.0 < ci.lower || ci.upper < 0.0;
      length[r] = ci.upper - ci.lower;
    });
    const auto rate = [&](const std::vector<char>& v) {
      return static_cast<double>(std::count(v.begin(), v.end(), 1)) / static_cast<double>(cfg.replicates);
    };
    double mean_length = 0.0;
    for (double l : length) mean_length += l;
    mean_length /= static_cast<double>(cfg.replicates);
    const double cov = rate(covered), pow = rate(excludes_zero);
    report.rows.push_back(
        {cfg.taus[t], tau_star, cov, mc_se(cov, cfg.replicates), mean_length, pow, mc_se(pow, cfg.replicates)});
  }
  return report;
}

Experiment timing_experiment(std::size_t groups) {
  if (groups == 0) throw ValidationError("timing study needs at least one group");
  static constexpr long kOnesCycle[3] = {2, 1, 3};
  std::vector<AttributeCode> codes;
  std::vector<int> labels;
  for (std::size_t k = 0; k < groups; ++k) {
    const long ones = kOnesCycle[k % 3];
    for (long j = 0; j < 4; ++j) {
      codes.push_back(j < ones ? 1 : 0);
      labels.push_back(static_cast<int>(k));
    }
  }
  auto attribute = AttributeVector::binary(std::move(codes));
  GroupLabelAssignment l(std::move(labels), groups);
  auto exposures = exposure_from_labels(l, attribute, ExposureKind::count);
  OutcomeVector y(std::vector<double>(attribute.size(), 0.0));
  return Experiment{std::move(attribute), std::move(l), std::move(y), std::move(exposures)};
}

SimReport timing_study(const TimingConfig& cfg) {
  if (cfg.draws == 0) throw ValidationError("timing study needs at least one draw");
  using clock = std::chrono::steady_clock;
  SimReport report{"timing",
                   {"groups", "units", "rejection_mean_attempts", "rejection_seconds", "permutation_seconds",
                    "permutation_seconds_per_draw", "timed_out"},
                   {},
                   {}};
  for (std::size_t groups : cfg.group_counts) {
    const auto experiment = timing_experiment(groups);
    const Design design = cr_from_observed(experiment.labels);
    const ExposureMapping mapping{ExposureKind::count, nullptr};
    const auto focal = focal_set(experiment.exposures, kOneVsZero.c1, kOneVsZero.c2);

    std::size_t attempts = 0;
    bool timed_out = false;
    const auto t0 = clock::now();
    for (std::size_t d = 0; d < cfg.draws && !timed_out; ++d) {
      Rng rng(derive_seed(cfg.seed, {kTimingStream, groups, d}));
      try {
        attempts += rejection_sample_conditional(design, experiment.attribute, mapping, focal, rng, cfg.max_attempts)
                        .attempts;
      } catch (const GuardError&) {
        timed_out = true;
      }
    }
    const double rejection_seconds = std::chrono::duration<double>(clock::now() - t0).count();

    const auto strata = joint_strata(experiment.attribute, focal);
    std::size_t checksum = 0;
    const auto t1 = clock::now();
    for (std::size_t d = 0; d < cfg.draws; ++d) {
      Rng rng(derive_seed(cfg.seed, {kTimingStream, groups, d, 1}));
      const auto w = apply_permutation(sample_stabilizer_permutation(strata, rng), experiment.exposures);
      checksum += static_cast<std::size_t>(w[0].as_count());
    }
    const double permutation_seconds = std::chrono::duration<double>(clock::now() - t1).count();
    (void)checksum;

    report.rows.push_back({static_cast<double>(groups), static_cast<double>(experiment.size()),
                           timed_out ? std::nan("") : static_cast<double>(attempts) / static_cast<double>(cfg.draws),
                           rejection_seconds, permutation_seconds,
                           permutation_seconds / static_cast<double>(cfg.draws), timed_out ? 1.0 : 0.0});
  }

  // Least-squares slope of log rejection time against K, over rows that finished.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (const auto& row : report.rows) {
    if (row[6] != 0.0 || !(row[3] > 0.0)) continue;
    const double x = row[0], y = std::log(row[3]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1;
  }
  const double slope = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : std::nan("");
  report.summary.push_back({"log_rejection_seconds_slope", slope});

  bool superlinear = report.rows.size() >= 3;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const double prev = report.rows[i - 1][2], cur = report.rows[i][2];
    if (!(cur > prev)) superlinear = false;
    if (i >= 2 && !(cur - prev > prev - report.rows[i - 2][2])) superlinear = false;
  }
  report.summary.push_back({"rejection_attempts_superlinear", superlinear ? 1.0 : 0.0});
  return report;
}

}  // namespace peerperm
