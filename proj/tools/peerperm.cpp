// peerperm: randomization tests and interval estimates for peer effects in
// group formation experiments.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "peerperm/cli_io.hpp"
#include "peerperm/error.hpp"
#include "peerperm/parallel.hpp"

using namespace peerperm;

namespace {

// Raw option text keyed by long flag name; config-file values are merged
// underneath whatever was given on the command line.
struct RawOptions {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App* app, const std::string& name, const std::string& help) {
    auto* opt = app->add_option("--" + name, values[name], help);
    options.emplace_back(name, opt);
  }

  std::map<std::string, std::string> merged(const std::string& config_file) const {
    std::map<std::string, std::string> out;
    if (!config_file.empty()) out = read_key_values(config_file);
    for (const auto& [name, opt] : options)
      if (opt->count() > 0) out[name] = values.at(name);
    return out;
  }
};

std::string take(std::map<std::string, std::string>& kv, const std::string& key, const std::string& fallback = "") {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::string v = it->second;
  kv.erase(it);
  return v;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !in.eof()) throw ValidationError("--" + key + ": not a number: '" + text + "'");
  return v;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

template <class Writer>
void write_file(const std::string& path, Writer&& writer) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  writer(out);
}

const std::vector<std::string> kDataKeys = {"data",          "attribute-levels", "unit-column",
                                            "attribute-column", "group-column",  "outcome-column"};

const std::vector<std::string> kAnalysisKeys = {
    "seed",      "permutations", "alpha",        "statistic",     "exposure",   "base-exposure",
    "coarsen-map", "c1",         "c2",           "subgroup",      "grid",       "shift",
    "estimator", "direction",    "design",       "stratify-on",   "strata-column", "covariates",
    "expect-focal-tally", "threads"};

ExperimentTable load_table(std::map<std::string, std::string>& kv, bool require_outcome) {
  const std::string path = take(kv, "data");
  if (path.empty()) throw ValidationError("--data is required");
  CsvSchema schema;
  schema.attribute_levels = split_list(take(kv, "attribute-levels"));
  schema.unit_id = take(kv, "unit-column", schema.unit_id);
  schema.attribute = take(kv, "attribute-column", schema.attribute);
  schema.group = take(kv, "group-column", schema.group);
  schema.outcome = take(kv, "outcome-column", schema.outcome);
  schema.require_outcome = require_outcome;
  return load_csv(path, schema);
}

AnalysisConfig analysis_config(const std::string& command, std::map<std::string, std::string>& kv) {
  AnalysisConfig c;
  c.command = command;
  if (auto v = take(kv, "seed"); !v.empty()) c.seed = parse_number<std::uint64_t>("seed", v);
  if (auto v = take(kv, "permutations"); !v.empty()) c.permutations = parse_number<std::size_t>("permutations", v);
  if (auto v = take(kv, "alpha"); !v.empty()) c.alpha = parse_number<double>("alpha", v);
  if (auto v = take(kv, "statistic"); !v.empty()) c.statistic = parse_statistic(v);
  if (auto v = take(kv, "exposure"); !v.empty()) c.exposure = parse_exposure_kind(v);
  if (auto v = take(kv, "base-exposure"); !v.empty()) c.base_exposure = parse_exposure_kind(v);
  c.coarsen_map = take(kv, "coarsen-map");
  c.c1 = take(kv, "c1");
  c.c2 = take(kv, "c2");
  if (auto v = take(kv, "subgroup"); !v.empty()) c.subgroup = v;
  if (auto v = take(kv, "grid"); !v.empty()) c.grid = parse_grid(v);
  if (auto v = take(kv, "shift"); !v.empty()) c.shift = parse_number<double>("shift", v);
  if (auto v = take(kv, "estimator"); !v.empty()) c.estimator = parse_estimator(v);
  if (auto v = take(kv, "direction"); !v.empty()) c.direction = parse_direction(v);
  if (auto v = take(kv, "design"); !v.empty()) c.design = parse_design(v);
  c.stratify_on = take(kv, "stratify-on");
  c.strata_column = take(kv, "strata-column");
  c.covariates = split_list(take(kv, "covariates"));
  c.expect_focal_tally = take(kv, "expect-focal-tally");
  if (auto v = take(kv, "threads"); !v.empty()) c.threads = parse_number<unsigned>("threads", v);
  if (c.permutations == 0) throw ValidationError("--permutations must be positive");
  return c;
}

void reject_leftovers(const std::map<std::string, std::string>& kv) {
  if (!kv.empty()) throw ValidationError("unknown config key '" + kv.begin()->first + "'");
}

struct AnalysisCommand {
  RawOptions raw;
  std::string config_file;
  std::string from_report;
  std::string out;
  std::string draws_csv;
  std::string curve_csv;
};

CLI::App* add_analysis(CLI::App& app, const std::string& name, const std::string& help, AnalysisCommand& cmd) {
  auto* sub = app.add_subcommand(name, help);
  cmd.raw.add(sub, "data", "experiment CSV (unit_id, attribute, group, outcome, ...)");
  cmd.raw.add(sub, "attribute-levels", "attribute alphabet, comma-separated (overrides the file's metadata)");
  cmd.raw.add(sub, "unit-column", "unit id column name");
  cmd.raw.add(sub, "attribute-column", "attribute column name");
  cmd.raw.add(sub, "group-column", "group id column name");
  cmd.raw.add(sub, "outcome-column", "outcome column name");
  cmd.raw.add(sub, "seed", "RNG seed (default 0)");
  cmd.raw.add(sub, "permutations", "Monte Carlo replicates L (default 1000)");
  cmd.raw.add(sub, "alpha", "level for intervals (default 0.05)");
  cmd.raw.add(sub, "statistic", "diff-in-means | studentized | stratified-diff | residual-adjusted");
  cmd.raw.add(sub, "exposure", "multiset | count | coarsened");
  cmd.raw.add(sub, "base-exposure", "exposure kind the coarsening map is keyed on (default multiset)");
  cmd.raw.add(sub, "coarsen-map", "two-column CSV: exposure, label");
  cmd.raw.add(sub, "c1", "first exposure of the contrast");
  cmd.raw.add(sub, "c2", "second exposure of the contrast");
  cmd.raw.add(sub, "subgroup", "restrict the pairwise null to one attribute level");
  cmd.raw.add(sub, "grid", "shift grid lo:hi:step");
  cmd.raw.add(sub, "shift", "constant shift c for test-pairwise");
  cmd.raw.add(sub, "estimator", "valid | unbiased");
  cmd.raw.add(sub, "direction", "greater | two-sided");
  cmd.raw.add(sub, "design", "observed | sr | cr");
  cmd.raw.add(sub, "stratify-on", "column C: SR design on B = (attribute, C)");
  cmd.raw.add(sub, "strata-column", "stratum column for stratified-diff");
  cmd.raw.add(sub, "covariates", "numeric columns for residual-adjusted, comma-separated");
  cmd.raw.add(sub, "expect-focal-tally", "precheck level:n_c1/n_c2,...");
  cmd.raw.add(sub, "threads", "worker threads (default: all cores)");
  sub->add_option("--config", cmd.config_file, "key=value file; flags override it");
  sub->add_option("--from-report", cmd.from_report, "reuse the config echoed in a previous report");
  sub->add_option("--out", cmd.out, "report path (default stdout)");
  sub->add_option("--draws-csv", cmd.draws_csv, "write null draws as CSV");
  sub->add_option("--curve-csv", cmd.curve_csv, "write the p-value curve as CSV");
  return sub;
}

int run_analysis(const std::string& name, AnalysisCommand& cmd) {
  auto kv = cmd.raw.merged(cmd.config_file);
  const ExperimentTable table = load_table(kv, true);
  AnalysisConfig config;
  if (!cmd.from_report.empty()) {
    std::ifstream in(cmd.from_report);
    if (!in) throw ValidationError("cannot open " + cmd.from_report);
    Json report;
    try {
      report = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(cmd.from_report + ": " + e.what());
    }
    if (!report.contains("config")) throw ValidationError(cmd.from_report + ": no config section");
    config = config_from_json(report["config"]);
    if (config.command != name)
      throw ValidationError("report was produced by '" + config.command + "', not '" + name + "'");
    if (auto v = take(kv, "threads"); !v.empty()) config.threads = parse_number<unsigned>("threads", v);
    for (const auto& key : kAnalysisKeys)
      if (kv.count(key)) throw ValidationError("--" + key + " cannot be combined with --from-report");
  } else {
    config = analysis_config(name, kv);
  }
  reject_leftovers(kv);
  RunArtifacts artifacts;
  const Json report = run(config, table, &artifacts);
  write_output(cmd.out, report.dump(2) + "\n");
  write_file(cmd.draws_csv, [&](std::ostream& o) { write_draws_csv(o, artifacts.null_draws); });
  write_file(cmd.curve_csv, [&](std::ostream& o) { write_curve_csv(o, artifacts.curve); });
  return 0;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<double>(key, item));
  return out;
}

struct SimulateCommand {
  std::string study;
  std::size_t replicates = 0;
  std::size_t permutations = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 20190917;
  unsigned threads = 0;
  std::string taus;
  std::string direction;
  std::string groups = "3,4,5,6";
  std::size_t draws = 1000;
  std::size_t max_attempts = 10'000'000;
  std::string out;
  std::string csv;
};

int run_simulate(const SimulateCommand& cmd, CLI::App* sub) {
  SimReport report;
  Json params;
  if (cmd.study == "timing") {
    TimingConfig cfg;
    cfg.group_counts.clear();
    for (const auto& g : split_list(cmd.groups)) cfg.group_counts.push_back(parse_number<std::size_t>("groups", g));
    cfg.draws = cmd.draws;
    cfg.max_attempts = cmd.max_attempts;
    cfg.seed = cmd.seed;
    params = Json{{"groups", cfg.group_counts}, {"draws", cfg.draws}, {"max_attempts", cfg.max_attempts},
                  {"seed", cfg.seed}};
    report = timing_study(cfg);
  } else {
    SimConfig cfg = SimConfig::application_shape();
    if (cmd.study == "covariate") {
      cfg.model = OutcomeModel::beta_covariate;
      cfg.taus = {0.0, 0.1, 0.2, 0.3, 0.35, 0.4, 0.5, 0.6};
    } else if (cmd.study == "coverage") {
      cfg.taus = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    } else if (cmd.study != "power") {
      throw ValidationError("unknown study '" + cmd.study + "' (power, covariate, coverage, timing)");
    }
    if (sub->get_option("--replicates")->count()) cfg.replicates = cmd.replicates;
    cfg.permutations = cmd.permutations;
    cfg.alpha = cmd.alpha;
    cfg.seed = cmd.seed;
    cfg.threads = cmd.threads;
    if (!cmd.taus.empty()) cfg.taus = parse_doubles("taus", cmd.taus);
    if (!cmd.direction.empty()) cfg.direction = parse_direction(cmd.direction);
    params = Json{{"replicates", cfg.replicates}, {"permutations", cfg.permutations}, {"alpha", cfg.alpha},
                  {"seed", cfg.seed},             {"taus", cfg.taus},                 {"direction", to_string(cfg.direction)}};
    if (cmd.study == "power") report = power_study(cfg);
    if (cmd.study == "covariate") report = covariate_gain_study(cfg);
    if (cmd.study == "coverage") report = hl_coverage_study(cfg);
  }
  Json j{{"tool", "peerperm"}, {"version", kVersion}, {"command", "simulate " + cmd.study}, {"config", params}};
  j["result"] = to_json(report);
  write_output(cmd.out, j.dump(2) + "\n");
  write_file(cmd.csv, [&](std::ostream& o) { write_sim_csv(o, report); });
  return 0;
}

struct OracleCommand {
  std::string mode;
  RawOptions raw;
  std::string config_file;
  std::string null_kind = "pairwise";
  std::string candidate;
  std::size_t guard = kDefaultEnumerationGuard;
  bool conditional = false;
  std::string out;
};

std::vector<Exposure> parse_candidate(const std::string& text, ExposureKind kind, std::span<const std::string> levels) {
  std::vector<Exposure> out;
  for (const auto& item : split_list(text, ';')) out.push_back(parse_exposure(item, kind, levels));
  return out;
}

int run_oracle(OracleCommand& cmd) {
  auto kv = cmd.raw.merged(cmd.config_file);
  const ExperimentTable table = load_table(kv, cmd.mode == "exact-p");
  AnalysisConfig config = analysis_config("oracle " + cmd.mode, kv);
  reject_leftovers(kv);
  const auto& levels = table.attribute.levels();
  const auto coarsening = build_coarsening(config, levels);
  const ExposureMapping mapping{coarsening ? config.base_exposure : config.exposure,
                                coarsening ? &*coarsening : nullptr};
  const Design design = build_design(config, table);

  Json j{{"tool", "peerperm"}, {"version", kVersion}, {"command", "oracle " + cmd.mode}};
  j["config"] = config_to_json(config);
  j["config"]["guard"] = cmd.guard;
  j["support_size"] = support_size(design).str();

  if (cmd.mode == "enumerate") {
    auto law = exact_exposure_distribution(design, table.attribute, mapping, cmd.guard);
    if (cmd.conditional) {
      const auto observed = map_exposures(table.labels, table.attribute, mapping);
      const Contrast contrast{parse_exposure(config.c1, config.exposure, levels),
                              parse_exposure(config.c2, config.exposure, levels)};
      law = condition_on_focal(law, focal_set(observed, contrast.c1, contrast.c2));
    }
    j["distribution"] = to_json(law, levels);
  } else if (cmd.mode == "exact-p") {
    j["config"]["null"] = cmd.null_kind;
    const auto p = prepare(config, table);
    NullSpec null;
    if (cmd.null_kind == "sharp") {
      null.kind = NullSpec::Kind::sharp;
    } else if (cmd.null_kind != "pairwise") {
      throw ValidationError("--null must be sharp or pairwise");
    }
    null.contrast = p.contrast;
    null.subgroup = p.subgroup;
    const auto value = exact_pvalue(p.experiment, design, mapping, null, p.spec, cmd.guard);
    j["p_value"] = value.str();
    j["p_value_decimal"] = static_cast<double>(value);
  } else if (cmd.mode == "feasibility") {
    if (cmd.candidate.empty()) throw ValidationError("--candidate is required");
    ExposureVector candidate{config.exposure, parse_candidate(cmd.candidate, config.exposure, levels)};
    j["candidate"] = cmd.candidate;
    j["feasible"] = feasibility_check(candidate, design, table.attribute, mapping, cmd.guard);
  }
  write_output(cmd.out, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomization inference for peer effects in group formation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  AnalysisCommand sharp, pairwise, hl, ci;
  auto* sharp_cmd = add_analysis(app, "test-sharp", "test the sharp null of no peer effect", sharp);
  auto* pairwise_cmd = add_analysis(app, "test-pairwise", "conditional test of Y(c1) = Y(c2)", pairwise);
  auto* hl_cmd = add_analysis(app, "hl", "Hodges-Lehmann estimate of a constant shift", hl);
  auto* ci_cmd = add_analysis(app, "ci", "confidence interval by test inversion", ci);

  SimulateCommand sim;
  auto* sim_cmd = app.add_subcommand("simulate", "simulation studies");
  sim_cmd->add_option("study", sim.study, "power | covariate | coverage | timing")->required();
  sim_cmd->add_option("--replicates", sim.replicates, "outer replicates R (default 300)");
  sim_cmd->add_option("--permutations", sim.permutations, "inner replicates L");
  sim_cmd->add_option("--alpha", sim.alpha, "test level");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--threads", sim.threads, "worker threads (default: all cores)");
  sim_cmd->add_option("--taus", sim.taus, "effect sizes, comma-separated");
  sim_cmd->add_option("--direction", sim.direction, "greater | two-sided (power and covariate studies)");
  sim_cmd->add_option("--groups", sim.groups, "timing: group counts, comma-separated");
  sim_cmd->add_option("--draws", sim.draws, "timing: draws per group count");
  sim_cmd->add_option("--max-attempts", sim.max_attempts, "timing: rejection sampler cap per draw");
  sim_cmd->add_option("--out", sim.out, "report path (default stdout)");
  sim_cmd->add_option("--csv", sim.csv, "write the study table as CSV");

  OracleCommand oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "exact enumeration for small designs");
  oracle_cmd->add_option("mode", oracle.mode, "enumerate | exact-p | feasibility")
      ->required()
      ->check(CLI::IsMember({"enumerate", "exact-p", "feasibility"}));
  for (const auto& key : kDataKeys) oracle.raw.add(oracle_cmd, key, "see test-sharp --help");
  for (const auto& key : kAnalysisKeys) oracle.raw.add(oracle_cmd, key, "see test-sharp --help");
  oracle_cmd->add_option("--config", oracle.config_file, "key=value file; flags override it");
  oracle_cmd->add_option("--null", oracle.null_kind, "exact-p: sharp | pairwise");
  oracle_cmd->add_option("--candidate", oracle.candidate, "feasibility: exposures separated by ';'");
  oracle_cmd->add_option("--guard", oracle.guard, "largest support to enumerate");
  oracle_cmd->add_flag("--conditional", oracle.conditional, "enumerate: condition on the observed focal set");
  oracle_cmd->add_option("--out", oracle.out, "report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sharp_cmd->parsed()) return run_analysis("test-sharp", sharp);
    if (pairwise_cmd->parsed()) return run_analysis("test-pairwise", pairwise);
    if (hl_cmd->parsed()) return run_analysis("hl", hl);
    if (ci_cmd->parsed()) return run_analysis("ci", ci);
    if (sim_cmd->parsed()) return run_simulate(sim, sim_cmd);
    if (oracle_cmd->parsed()) return run_oracle(oracle);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const GuardError& e) {
    std::cerr << "guard: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
