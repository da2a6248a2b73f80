// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "datasets.hpp"
#include "peerperm/cli_io.hpp"
#include "peerperm/error.hpp"
#include "peerperm/estimation.hpp"
#include "peerperm/inference.hpp"
#include "peerperm/oracle.hpp"
#include "peerperm/parallel.hpp"
#include "peerperm/simharness.hpp"
#include "peerperm/symmetry.hpp"

using namespace peerperm;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("AC%d: %s %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

struct SmallCase {
  std::string name;
  std::vector<AttributeCode> a;
  std::vector<int> labels;
  std::size_t levels = 2;
  bool complete = false;  // CR instead of SR
  ExposureKind kind = ExposureKind::count;
  NullSpec null;
  TestStatisticSpec spec;
};

AttributeVector attribute_of(const SmallCase& c) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < c.levels; ++l) names.push_back(std::to_string(l));
  return AttributeVector(c.a, names);
}

Design design_of(const SmallCase& c) {
  const GroupLabelAssignment l(c.labels);
  if (c.complete) return cr_from_observed(l);
  return sr_from_observed(l, attribute_of(c));
}

std::vector<double> outcomes_for(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> y(n);
  for (auto& v : y) v = std::round(100 * rng.uniform01()) / 10;
  return y;
}

Exposure ms(std::vector<AttributeCode> codes) { return Exposure::multiset(std::move(codes)); }

std::vector<SmallCase> small_cases() {
  const Contrast zero_one{Exposure::count(0), Exposure::count(1)};
  const Contrast one_zero{Exposure::count(1), Exposure::count(0)};
  const Contrast one_two{Exposure::count(1), Exposure::count(2)};
  auto pairwise = [](Contrast c, std::optional<AttributeCode> sub = std::nullopt) {
    return NullSpec{NullSpec::Kind::pairwise, c, sub};
  };
  auto sharp = [](Contrast c) { return NullSpec{NullSpec::Kind::sharp, c, std::nullopt}; };
  auto dir = [](Direction d) {
    TestStatisticSpec s;
    s.direction = d;
    return s;
  };
  const auto greater = dir(Direction::greater);
  const auto two = dir(Direction::two_sided);

  const std::vector<AttributeCode> fig_a{1, 1, 0, 0, 1, 0, 0};
  const std::vector<int> fig_l{0, 0, 0, 1, 1, 2, 2};
  const std::vector<AttributeCode> pairs_a{1, 1, 0, 0, 1, 0, 1, 0};
  const std::vector<int> pairs_l{0, 0, 1, 1, 2, 2, 3, 3};
  const std::vector<AttributeCode> quads_a{1, 0, 0, 1, 0, 0, 1, 0};
  const std::vector<int> quads_l{0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<AttributeCode> trip_a{1, 1, 0, 0, 1, 0};
  const std::vector<int> trip_l{0, 0, 0, 1, 1, 1};
  const std::vector<AttributeCode> mixed_a{1, 0, 0, 1, 1, 0, 0, 1};
  const std::vector<int> mixed_l{0, 0, 0, 1, 1, 1, 2, 2};
  const std::vector<AttributeCode> tern_a{0, 1, 2, 0, 1, 2};
  const std::vector<int> tern_l{0, 0, 1, 1, 2, 2};

  return {
      {"figure SR pairwise", fig_a, fig_l, 2, false, ExposureKind::count, pairwise(zero_one), greater},
      {"figure SR sharp", fig_a, fig_l, 2, false, ExposureKind::count, sharp(zero_one), two},
      {"figure CR pairwise", fig_a, fig_l, 2, true, ExposureKind::count, pairwise(zero_one), two},
      {"figure SR subgroup", fig_a, fig_l, 2, false, ExposureKind::count, pairwise(zero_one, 0), greater},
      {"pairs SR pairwise", pairs_a, pairs_l, 2, false, ExposureKind::count, pairwise(one_zero), greater},
      {"pairs CR sharp", pairs_a, pairs_l, 2, true, ExposureKind::count, sharp(one_zero), greater},
      {"quads SR pairwise", quads_a, quads_l, 2, false, ExposureKind::count, pairwise(zero_one), two},
      {"quads CR sharp", quads_a, quads_l, 2, true, ExposureKind::count, sharp(one_two), two},
      {"triples SR pairwise", trip_a, trip_l, 2, false, ExposureKind::count, pairwise(one_two), greater},
      {"mixed SR pairwise", mixed_a, mixed_l, 2, false, ExposureKind::count, pairwise(one_two), two},
      {"mixed CR pairwise", mixed_a, mixed_l, 2, true, ExposureKind::count, pairwise(zero_one), greater},
      {"ternary SR multiset", tern_a, tern_l, 3, false, ExposureKind::multiset, pairwise({ms({0}), ms({1})}), two},
  };
}

// Exact p-value of the observed exposure under the law of `c`; arms that come
// out empty mean the test cannot be run, which never rejects.
Rational exact_p_or_one(const ExactDistribution& law, const AttributeVector& attr, const std::vector<double>& y,
                        const std::vector<Exposure>& w, const SmallCase& c) {
  try {
    if (c.null.kind == NullSpec::Kind::sharp) return exact_pvalue_from_law(law, attr, y, w, c.null, c.spec);
    ExposureVector ev{c.kind, w};
    auto focal = focal_set(ev, c.null.contrast.c1, c.null.contrast.c2);
    const auto conditional = condition_on_focal(law, focal);
    return exact_pvalue_from_law(conditional, attr, y, w, c.null, c.spec);
  } catch (const ValidationError&) {
    return Rational(1);
  }
}

void ac1_exact_validity() {
  const auto start = std::chrono::steady_clock::now();
  bool ok = true;
  std::size_t configs = 0;
  std::string worst;
  double worst_ratio = 0;
  for (const auto& c : small_cases()) {
    const auto attr = attribute_of(c);
    const Design design = design_of(c);
    const ExposureMapping mapping{c.kind};
    const auto law = exact_exposure_distribution(design, attr, mapping);
    const auto y = outcomes_for(attr.size(), 1000 + configs);
    // Both designs are uniform on their label support.
    std::map<Rational, Rational> mass;
    const auto support = enumerate_assignments(design);
    const Rational each(1, static_cast<long>(support.size()));
    for (const auto& l : support) {
      const auto w = map_exposures(l, attr, mapping);
      mass[exact_p_or_one(law, attr, y, w.values, c)] += each;
    }
    Rational cumulative = 0;
    for (const auto& [p, m] : mass) {
      cumulative += m;
      if (cumulative > p) ok = false;
      const double ratio = (cumulative / p).convert_to<double>();
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        worst = c.name + " at alpha=" + fmt(p.convert_to<double>());
      }
    }
    ++configs;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ok = ok && configs >= 10 && secs < 300;
  report(1, ok,
         std::to_string(configs) + " configurations, max pr(p<=a)/a = " + fmt(worst_ratio) + " (" + worst + "), " +
             fmt(secs, 3) + " s");
}

void ac2_mc_vs_exact() {
  std::size_t instances = 0, agree = 0;
  double worst_z = 0;
  const std::size_t l = 100'000;
  std::uint64_t seed = 500;
  for (const auto& c : small_cases()) {
    if (c.complete) continue;  // the Monte Carlo test conditions on group tallies
    const auto attr = attribute_of(c);
    const GroupLabelAssignment labels(c.labels);
    const auto y = outcomes_for(attr.size(), seed);
    const auto e = make_experiment(attr, labels, OutcomeVector(y), c.kind);
    const Design design = design_of(c);
    TestOptions opt;
    opt.permutations = l;
    opt.seed = seed++;
    opt.estimator = PValueEstimator::unbiased;
    opt.keep_draws = false;
    opt.threads = 0;
    const double exact = exact_pvalue(e, design, {c.kind}, c.null, c.spec).convert_to<double>();
    const double mc = c.null.kind == NullSpec::Kind::sharp
                          ? test_sharp(e, design, c.null.contrast, c.spec, opt).p_value
                          : test_pairwise(e, design, c.null.contrast, c.spec, opt, c.null.subgroup).p_value;
    const double se = std::sqrt(exact * (1 - exact) / static_cast<double>(l));
    const double gap = std::abs(mc - exact);
    if (gap <= 3 * se + 1e-12) ++agree;
    if (se > 0) worst_z = std::max(worst_z, gap / se);
    else if (gap > 0) worst_z = INFINITY;
    ++instances;
  }
  // Extra instances: the figure SR configuration under several outcome draws.
  const auto attr = AttributeVector::binary({1, 1, 0, 0, 1, 0, 0});
  const GroupLabelAssignment labels({0, 0, 0, 1, 1, 2, 2});
  const Design design{sr_from_observed(labels, attr)};
  const NullSpec null{NullSpec::Kind::pairwise, {Exposure::count(0), Exposure::count(1)}, std::nullopt};
  while (instances < 12) {
    const auto y = outcomes_for(7, seed);
    const auto e = make_experiment(attr, labels, OutcomeVector(y), ExposureKind::count);
    TestOptions opt;
    opt.permutations = l;
    opt.seed = seed++;
    opt.estimator = PValueEstimator::unbiased;
    opt.keep_draws = false;
    opt.threads = 0;
    TestStatisticSpec spec;
    spec.direction = Direction::two_sided;
    const double exact = exact_pvalue(e, design, {ExposureKind::count}, null, spec).convert_to<double>();
    const double mc = test_pairwise(e, design, null.contrast, spec, opt).p_value;
    const double se = std::sqrt(exact * (1 - exact) / static_cast<double>(l));
    const double gap = std::abs(mc - exact);
    if (gap <= 3 * se + 1e-12) ++agree;
    if (se > 0) worst_z = std::max(worst_z, gap / se);
    ++instances;
  }
  report(2, instances >= 10 && agree == instances,
         std::to_string(agree) + "/" + std::to_string(instances) + " within 3 MC s.e. at L=1e5, max |z| = " +
             fmt(worst_z, 3));
}

// True when every atom has the same probability and the atoms form a single
// orbit under the permutations in `strata`.
bool uniform_single_orbit(const ExactDistribution& law, const StabilizerStrata& strata) {
  if (law.atoms.empty()) return false;
  const Rational first = law.atoms.begin()->second;
  for (const auto& [w, p] : law.atoms)
    if (p != first) return false;
  std::set<std::vector<Exposure>> orbit;
  const auto& w0 = law.atoms.begin()->first;
  for_each_stabilizer_permutation(strata, 10'000'000, [&](const Permutation& pi) {
    orbit.insert(apply_permutation(pi, std::span<const Exposure>(w0)));
  });
  if (orbit.size() != law.atoms.size()) return false;
  for (const auto& w : orbit)
    if (!law.atoms.contains(w)) return false;
  return true;
}

void ac3_orbit_uniformity() {
  std::size_t designs = 0, conditionals = 0;
  bool ok = true;
  std::string bad;
  for (const auto& c : small_cases()) {
    if (c.complete) continue;
    const auto attr = attribute_of(c);
    const Design design = design_of(c);
    const ExposureMapping mapping{c.kind};
    const auto law = exact_exposure_distribution(design, attr, mapping);
    ++designs;
    if (!uniform_single_orbit(law, stabilizer_strata(attr))) {
      ok = false;
      bad = c.name;
    }
    // Every contrast of two exposure values and every focal set it can produce.
    std::set<Exposure> values;
    for (const auto& [w, p] : law.atoms) values.insert(w.begin(), w.end());
    for (const auto& c1 : values)
      for (const auto& c2 : values) {
        if (!(c1 < c2)) continue;
        std::set<std::vector<bool>> seen;
        for (const auto& [w, p] : law.atoms) {
          const auto focal = focal_set(ExposureVector{c.kind, w}, c1, c2);
          if (!seen.insert(focal.member).second) continue;
          ++conditionals;
          if (!uniform_single_orbit(condition_on_focal(law, focal), joint_strata(attr, focal))) {
            ok = false;
            bad = c.name + " (conditional)";
          }
        }
      }
  }
  report(3, ok && designs > 0,
         std::to_string(designs) + " SR designs, " + std::to_string(conditionals) +
             " conditional laws uniform and single-orbit" + (ok ? "" : "; failed on " + bad));
}

void ac4_figure_feasibility() {
  const auto a = AttributeVector::binary({1, 1, 0, 0, 1, 0, 0});
  const GroupLabelAssignment l({0, 0, 0, 1, 1, 2, 2});
  const Design cr{CRDesign({3, 2, 2})};
  const ExposureMapping mapping{ExposureKind::count};
  const auto w = map_exposures(l, a, mapping);
  ExposureVector swapped = w;
  std::swap(swapped.values[3], swapped.values[4]);
  const bool swap_infeasible = !feasibility_check(swapped, cr, a, mapping);
  const auto strata = joint_strata(a, focal_set(w, Exposure::count(0), Exposure::count(1)));
  std::size_t total = 0, feasible = 0;
  for_each_stabilizer_permutation(strata, 1000, [&](const Permutation& pi) {
    ++total;
    feasible += feasibility_check(apply_permutation(pi, w), cr, a, mapping);
  });
  report(4, swap_infeasible && total == 36 && feasible == total,
         std::string("swap of units 4 and 5 ") + (swap_infeasible ? "infeasible" : "feasible") + "; " +
             std::to_string(feasible) + "/" + std::to_string(total) + " joint-strata permutations feasible");
}

void ac5_power() {
  auto cfg = SimConfig::application_shape();
  cfg.taus = {0.0, 0.25, 1.0};
  const auto r = power_study(cfg);
  const double p0 = r.value(0, "rejection_rate"), p25 = r.value(1, "rejection_rate"), p1 = r.value(2, "rejection_rate");
  const bool ok = std::abs(p0 - 0.05) <= 0.03 && p25 >= 0.38 && p25 <= 0.62 && p1 >= 0.97;
  report(5, ok, "R=300 L=1000 rejection rates: tau=0 " + fmt(p0) + ", tau=0.25 " + fmt(p25) + ", tau=1 " + fmt(p1));
}

void ac6_covariate_gain() {
  auto cfg = SimConfig::application_shape();
  cfg.model = OutcomeModel::beta_covariate;
  cfg.taus = {0.35};
  const auto r = covariate_gain_study(cfg);
  const double strat = r.value(0, "power_stratified"), plain = r.value(0, "power_attribute_only");
  report(6, strat - plain >= 0.1,
         "tau=0.35 power stratified " + fmt(strat) + " vs attribute only " + fmt(plain) + ", gain " +
             fmt(strat - plain));
}

void ac7_coverage() {
  struct Row {
    double tau, tau_star, coverage, length, power;
  };
  const std::vector<Row> table{{0, 0, .96, .65, .035},     {.1, .1, .96, .63, .06},   {.2, .198, .94, .62, .14},
                               {.3, .291, .94, .61, .34}, {.4, .378, .97, .59, .54}, {.5, .458, .92, .56, .80}};
  auto cfg = SimConfig::application_shape();
  cfg.replicates = 100;
  cfg.direction = Direction::two_sided;
  cfg.taus.clear();
  for (const auto& row : table) cfg.taus.push_back(row.tau);
  const auto r = hl_coverage_study(cfg);
  bool ok = true;
  std::ostringstream detail;
  detail << "R=100 L=1000 (tau: coverage/length/power)";
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double cov = r.value(i, "coverage"), len = r.value(i, "mean_length"), pow = r.value(i, "power");
    const bool row_ok = std::abs(cov - table[i].coverage) <= 0.05 && std::abs(len - table[i].length) <= 0.08 &&
                        std::abs(pow - table[i].power) <= 0.08;
    ok = ok && row_ok;
    detail << " " << fmt(table[i].tau) << ": " << fmt(cov, 3) << "/" << fmt(len, 3) << "/" << fmt(pow, 3)
           << (row_ok ? "" : "*");
  }
  report(7, ok, detail.str());
}

void ac8_timing() {
  TimingConfig cfg;
  cfg.group_counts = {3, 4, 5, 6};
  // Six groups need about 3e6 attempts per draw; the default cap would cut
  // off the tail of the geometric attempt count.
  cfg.draws = 100;
  cfg.max_attempts = 100'000'000;
  const auto r = timing_study(cfg);
  std::vector<double> attempts, per_draw;
  bool finished = true;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    attempts.push_back(r.value(i, "rejection_mean_attempts"));
    per_draw.push_back(r.value(i, "permutation_seconds_per_draw"));
    finished = finished && r.value(i, "timed_out") == 0.0;
  }
  const bool superlinear = r.summary_value("rejection_attempts_superlinear") == 1.0;
  const double spread = *std::max_element(per_draw.begin(), per_draw.end()) /
                        *std::min_element(per_draw.begin(), per_draw.end());
  std::ostringstream detail;
  detail << "mean attempts K=3..6:";
  for (double x : attempts) detail << " " << fmt(x);
  detail << "; permutation per-draw time ratio " << fmt(spread, 3);
  report(8, finished && superlinear && spread < 10, detail.str());
}

void ac9_thread_determinism() {
  const unsigned max_threads = std::max(2u, resolve_threads(0));
  std::vector<std::string> mismatched;

  auto cfg = SimConfig::application_shape();
  cfg.replicates = 20;
  cfg.permutations = 200;
  cfg.taus = {0.0, 0.5};
  auto sims = [&](unsigned threads) {
    cfg.threads = threads;
    Json j;
    j["power"] = to_json(power_study(cfg));
    auto cov = cfg;
    cov.model = OutcomeModel::beta_covariate;
    j["covariate"] = to_json(covariate_gain_study(cov));
    auto ci = cfg;
    ci.replicates = 4;
    ci.direction = Direction::two_sided;
    j["coverage"] = to_json(hl_coverage_study(ci));
    return j.dump();
  };
  if (sims(1) != sims(max_threads)) mismatched.push_back("simulation studies");

  std::istringstream in(datasets::li_csv(9));
  const auto table = parse_csv(in, {}, "li");
  for (const std::string command : {"test-sharp", "test-pairwise", "hl", "ci"}) {
    AnalysisConfig c;
    c.command = command;
    c.c1 = "0";
    c.c2 = "3";
    c.seed = 17;
    c.permutations = 500;
    c.statistic = command == "ci" ? StatisticKind::studentized : StatisticKind::diff_in_means;
    c.threads = 1;
    const auto one = run(c, table).dump(2);
    c.threads = max_threads;
    if (run(c, table).dump(2) != one) mismatched.push_back(command);
  }
  std::string detail = "threads 1 vs " + std::to_string(max_threads) + ": ";
  if (mismatched.empty()) {
    detail += "simulation and analysis reports byte-identical";
  } else {
    detail += "differences in";
    for (const auto& m : mismatched) detail += " " + m;
  }
  report(9, mismatched.empty(), detail);
}

void ac10_real_data() {
  // Synthetic data with the application's focal tallies, always checked.
  std::istringstream in(datasets::li_csv(1));
  const auto synthetic = parse_csv(in, {}, "synthetic");
  AnalysisConfig c;
  c.command = "test-pairwise";
  c.c1 = "0";
  c.c2 = "3";
  c.permutations = 100;
  c.expect_focal_tally = "1:13/4,0:40/5";
  bool ok = true;
  std::string detail;
  try {
    run(c, synthetic);
    detail = "synthetic tally 13/4 and 40/5 reproduced";
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("synthetic tally: ") + e.what();
  }

  const char* path = std::getenv("PEERPERM_LI_DATA");
  if (path && std::filesystem::exists(path)) {
    try {
      CsvSchema schema;
      if (const char* levels = std::getenv("PEERPERM_LI_LEVELS")) schema.attribute_levels = split_list(levels);
      const auto table = load_csv(path, schema);
      AnalysisConfig real = c;
      if (const char* tally = std::getenv("PEERPERM_LI_TALLY")) real.expect_focal_tally = tally;
      run(real, table);
      detail += "; real data " + std::string(path) + " passes the precheck";
    } catch (const std::exception& e) {
      ok = false;
      detail += std::string("; real data precheck failed: ") + e.what();
    }
  } else {
    detail += "; real data not present (set PEERPERM_LI_DATA), precheck skipped";
  }
  report(10, ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<std::function<void()>> checks{ac1_exact_validity, ac2_mc_vs_exact,   ac3_orbit_uniformity,
                                                  ac4_figure_feasibility, ac5_power,     ac6_covariate_gain,
                                                  ac7_coverage,       ac8_timing,        ac9_thread_determinism,
                                                  ac10_real_data};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (!only.empty() && !only.contains(static_cast<int>(i + 1))) continue;
    try {
      checks[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, std::string("error: ") + e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}
