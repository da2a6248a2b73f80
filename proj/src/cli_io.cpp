#include "peerperm/cli_io.hpp"

#include <algorithm>
#include <boost/tokenizer.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "peerperm/error.hpp"

namespace peerperm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line, const std::string& where) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::vector<std::string> out;
  try {
    Tokenizer tokens(line, boost::escaped_list_separator<char>('\\', ',', '"'));
    for (const auto& field : tokens) out.push_back(trim(field));
  } catch (const boost::escaped_list_error& e) {
    throw ValidationError(where + ": malformed CSV field (" + e.what() + ")");
  }
  return out;
}

std::optional<double> parse_real(const std::string& text) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string normalize_name(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

const std::vector<std::string>& ExperimentTable::column(const std::string& name) const {
  auto it = std::find(extra_names.begin(), extra_names.end(), name);
  if (it == extra_names.end()) throw ValidationError("no column '" + name + "' in the data");
  return extra_columns[static_cast<std::size_t>(it - extra_names.begin())];
}

std::vector<double> ExperimentTable::numeric_column(const std::string& name) const {
  const auto& raw = column(name);
  std::vector<double> out(raw.size());
  for (std::size_t r = 0; r < raw.size(); ++r) {
    auto v = parse_real(raw[r]);
    if (!v) throw ValidationError("row " + std::to_string(r + 1) + ", column '" + name + "': not a number: '" + raw[r] + "'");
    out[r] = *v;
  }
  return out;
}

std::vector<int> ExperimentTable::category_column(const std::string& name) const {
  const auto& raw = column(name);
  std::map<std::string, int> codes;
  std::vector<int> out(raw.size());
  for (std::size_t r = 0; r < raw.size(); ++r) {
    if (raw[r].empty()) throw ValidationError("row " + std::to_string(r + 1) + ", column '" + name + "': empty value");
    auto [it, inserted] = codes.emplace(raw[r], static_cast<int>(codes.size()));
    out[r] = it->second;
  }
  return out;
}

ExperimentTable parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  std::vector<std::string> levels = schema.attribute_levels;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  std::string line;

  struct Row {
    std::size_t line;
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = source + ": line " + std::to_string(line_no);
    if (t.front() == '#') {
      const std::string meta = trim(t.substr(1));
      const auto eq = meta.find('=');
      if (header.empty() && eq != std::string::npos && trim(meta.substr(0, eq)) == "attribute_levels" &&
          schema.attribute_levels.empty())
        levels = split_list(meta.substr(eq + 1));
      continue;
    }
    auto fields = split_fields(line, where);
    if (header.empty()) {
      header = std::move(fields);
      std::set<std::string> seen;
      for (const auto& h : header)
        if (!seen.insert(h).second) throw ValidationError(where + ": duplicate column '" + h + "'");
      continue;
    }
    if (fields.size() != header.size())
      throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    rows.push_back({line_no, std::move(fields)});
  }
  if (rows.empty()) throw ValidationError(source + ": no data rows");

  auto index_of = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw ValidationError(source + ": missing column '" + name + "'");
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t col_id = *index_of(schema.unit_id, true);
  const std::size_t col_attr = *index_of(schema.attribute, true);
  const std::size_t col_group = *index_of(schema.group, true);
  const auto col_outcome = index_of(schema.outcome, schema.require_outcome);

  if (levels.empty())
    throw ValidationError(source +
                          ": attribute alphabet is not declared; add a '# attribute_levels=...' line or pass "
                          "--attribute-levels");
  {
    std::set<std::string> seen;
    for (const auto& l : levels)
      if (l.empty() || !seen.insert(l).second) throw ValidationError(source + ": invalid attribute level list");
  }

  ExperimentTable table;
  std::vector<AttributeCode> codes;
  std::vector<int> labels;
  std::map<std::string, int> group_index;
  std::set<std::string> ids;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == col_id || c == col_attr || c == col_group || (col_outcome && c == *col_outcome)) continue;
    table.extra_names.push_back(header[c]);
    table.extra_columns.emplace_back();
  }

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    const std::string where = source + ": row " + std::to_string(r + 1) + " (line " + std::to_string(rows[r].line) + ")";
    if (f[col_id].empty()) throw ValidationError(where + ": empty unit_id");
    if (!ids.insert(f[col_id]).second) throw ValidationError(where + ": duplicate unit_id '" + f[col_id] + "'");
    table.unit_ids.push_back(f[col_id]);

    auto level = std::find(levels.begin(), levels.end(), f[col_attr]);
    if (level == levels.end()) throw ValidationError(where + ": unknown attribute code '" + f[col_attr] + "'");
    codes.push_back(static_cast<AttributeCode>(level - levels.begin()));

    if (f[col_group].empty()) throw ValidationError(where + ": empty group id");
    auto [g, inserted] = group_index.emplace(f[col_group], static_cast<int>(group_index.size()));
    if (inserted) table.group_ids.push_back(f[col_group]);
    labels.push_back(g->second);

    if (col_outcome) {
      auto y = parse_real(f[*col_outcome]);
      if (!y) throw ValidationError(where + ": unparseable outcome '" + f[*col_outcome] + "'");
      table.outcomes.push_back(*y);
    } else {
      table.outcomes.push_back(0.0);
    }

    std::size_t extra = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == col_id || c == col_attr || c == col_group || (col_outcome && c == *col_outcome)) continue;
      table.extra_columns[extra++].push_back(f[c]);
    }
  }
  table.attribute = AttributeVector(std::move(codes), std::move(levels));
  table.labels = GroupLabelAssignment(std::move(labels), table.group_ids.size());
  return table;
}

ExperimentTable load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_csv(in, schema, path.string());
}

CoarseningMap load_coarsening_map(const std::filesystem::path& path, ExposureKind base_kind,
                                  std::span<const std::string> levels) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  CoarseningMap map;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::string where = path.string() + ": line " + std::to_string(line_no);
    auto fields = split_fields(line, where);
    if (first && !fields.empty() && fields[0] == "exposure") {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 2 || fields[1].empty()) throw ValidationError(where + ": expected 'exposure,label'");
    Exposure key;
    try {
      key = parse_exposure(fields[0], base_kind, levels);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    auto [it, inserted] = map.emplace(key, fields[1]);
    if (!inserted && it->second != fields[1])
      throw ValidationError(where + ": exposure " + fields[0] + " mapped twice");
  }
  if (map.empty()) throw ValidationError(path.string() + ": empty coarsening map");
  return map;
}

GridSpec parse_grid(const std::string& text) {
  const auto parts = split_list(text, ':');
  if (parts.size() != 3) throw ValidationError("grid must look like lo:hi:step, got '" + text + "'");
  GridSpec g;
  double* slots[3] = {&g.lo, &g.hi, &g.step};
  for (std::size_t i = 0; i < 3; ++i) {
    auto v = parse_real(parts[i]);
    if (!v) throw ValidationError("grid must look like lo:hi:step, got '" + text + "'");
    *slots[i] = *v;
  }
  ShiftGrid::range(g.lo, g.hi, g.step);  // validates
  return g;
}

std::string to_string(ExposureKind kind) {
  switch (kind) {
    case ExposureKind::multiset: return "multiset";
    case ExposureKind::count: return "count";
    case ExposureKind::coarsened: return "coarsened";
  }
  return "";
}

std::string to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::diff_in_means: return "diff-in-means";
    case StatisticKind::studentized: return "studentized";
    case StatisticKind::stratified_diff: return "stratified-diff";
    case StatisticKind::residual_adjusted: return "residual-adjusted";
  }
  return "";
}

std::string to_string(Direction direction) { return direction == Direction::greater ? "greater" : "two-sided"; }
std::string to_string(PValueEstimator estimator) {
  return estimator == PValueEstimator::valid ? "valid" : "unbiased";
}
std::string to_string(DesignChoice design) {
  switch (design) {
    case DesignChoice::observed: return "observed";
    case DesignChoice::sr: return "sr";
    case DesignChoice::cr: return "cr";
  }
  return "";
}

ExposureKind parse_exposure_kind(const std::string& text) {
  const auto s = normalize_name(text);
  if (s == "multiset") return ExposureKind::multiset;
  if (s == "count") return ExposureKind::count;
  if (s == "coarsened") return ExposureKind::coarsened;
  throw ValidationError("unknown exposure kind '" + text + "' (multiset, count, coarsened)");
}

StatisticKind parse_statistic(const std::string& text) {
  const auto s = normalize_name(text);
  if (s == "diff-in-means") return StatisticKind::diff_in_means;
  if (s == "studentized") return StatisticKind::studentized;
  if (s == "stratified-diff") return StatisticKind::stratified_diff;
  if (s == "residual-adjusted") return StatisticKind::residual_adjusted;
  throw ValidationError("unknown statistic '" + text +
                        "' (diff-in-means, studentized, stratified-diff, residual-adjusted)");
}

Direction parse_direction(const std::string& text) {
  const auto s = normalize_name(text);
  if (s == "greater") return Direction::greater;
  if (s == "two-sided") return Direction::two_sided;
  throw ValidationError("unknown direction '" + text + "' (greater, two-sided)");
}

PValueEstimator parse_estimator(const std::string& text) {
  const auto s = normalize_name(text);
  if (s == "valid") return PValueEstimator::valid;
  if (s == "unbiased") return PValueEstimator::unbiased;
  throw ValidationError("unknown estimator '" + text + "' (valid, unbiased)");
}

DesignChoice parse_design(const std::string& text) {
  const auto s = normalize_name(text);
  if (s == "observed") return DesignChoice::observed;
  if (s == "sr") return DesignChoice::sr;
  if (s == "cr") return DesignChoice::cr;
  throw ValidationError("unknown design '" + text + "' (observed, sr, cr)");
}

Json config_to_json(const AnalysisConfig& c) {
  Json j;
  j["command"] = c.command;
  j["exposure"] = to_string(c.exposure);
  j["base_exposure"] = to_string(c.base_exposure);
  j["coarsen_map"] = c.coarsen_map;
  j["c1"] = c.c1;
  j["c2"] = c.c2;
  j["subgroup"] = c.subgroup ? Json(*c.subgroup) : Json(nullptr);
  j["statistic"] = to_string(c.statistic);
  j["direction"] = to_string(c.direction);
  j["estimator"] = to_string(c.estimator);
  j["permutations"] = c.permutations;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["grid"] = c.grid ? Json{{"lo", c.grid->lo}, {"hi", c.grid->hi}, {"step", c.grid->step}} : Json(nullptr);
  j["shift"] = c.shift;
  j["design"] = to_string(c.design);
  j["stratify_on"] = c.stratify_on;
  j["strata_column"] = c.strata_column;
  j["covariates"] = c.covariates;
  j["expect_focal_tally"] = c.expect_focal_tally;
  return j;
}

AnalysisConfig config_from_json(const Json& j) {
  AnalysisConfig c;
  try {
    c.command = j.at("command").get<std::string>();
    c.exposure = parse_exposure_kind(j.at("exposure").get<std::string>());
    c.base_exposure = parse_exposure_kind(j.at("base_exposure").get<std::string>());
    c.coarsen_map = j.at("coarsen_map").get<std::string>();
    c.c1 = j.at("c1").get<std::string>();
    c.c2 = j.at("c2").get<std::string>();
    if (!j.at("subgroup").is_null()) c.subgroup = j.at("subgroup").get<std::string>();
    c.statistic = parse_statistic(j.at("statistic").get<std::string>());
    c.direction = parse_direction(j.at("direction").get<std::string>());
    c.estimator = parse_estimator(j.at("estimator").get<std::string>());
    c.permutations = j.at("permutations").get<std::size_t>();
    c.alpha = j.at("alpha").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("grid").is_null()) {
      const auto& g = j.at("grid");
      c.grid = GridSpec{g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("step").get<double>()};
    }
    c.shift = j.at("shift").get<double>();
    c.design = parse_design(j.at("design").get<std::string>());
    c.stratify_on = j.at("stratify_on").get<std::string>();
    c.strata_column = j.at("strata_column").get<std::string>();
    c.covariates = j.at("covariates").get<std::vector<std::string>>();
    c.expect_focal_tally = j.at("expect_focal_tally").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  return c;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path.string() + ": line " + std::to_string(line_no) + ": expected key=value");
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

std::optional<CoarseningMap> build_coarsening(const AnalysisConfig& config, std::span<const std::string> levels) {
  if (config.exposure != ExposureKind::coarsened) {
    if (!config.coarsen_map.empty()) throw ValidationError("--coarsen-map requires --exposure coarsened");
    return std::nullopt;
  }
  if (config.coarsen_map.empty()) throw ValidationError("coarsened exposure needs --coarsen-map");
  if (config.base_exposure == ExposureKind::coarsened)
    throw ValidationError("coarsening map must be keyed on multiset or count exposures");
  return load_coarsening_map(config.coarsen_map, config.base_exposure, levels);
}

Design build_design(const AnalysisConfig& config, const ExperimentTable& table) {
  if (config.design == DesignChoice::cr) {
    if (!config.stratify_on.empty()) throw ValidationError("--stratify-on applies to SR designs only");
    return cr_from_observed(table.labels);
  }
  AttributeVector strata = table.attribute;
  if (!config.stratify_on.empty()) {
    const auto codes = table.category_column(config.stratify_on);
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (const auto& v : table.column(config.stratify_on))
      if (seen.insert(v).second) names.push_back(v);
    strata = constructed_covariate(table.attribute, AttributeVector(codes, names));
  }
  return sr_from_observed(table.labels, strata);
}

PreparedAnalysis prepare(const AnalysisConfig& config, const ExperimentTable& table) {
  const AttributeVector& attribute = table.attribute;
  auto coarsening = build_coarsening(config, attribute.levels());
  const ExposureKind computed = coarsening ? config.base_exposure : config.exposure;
  Experiment experiment = make_experiment(attribute, table.labels, OutcomeVector(table.outcomes), computed,
                                          coarsening ? &*coarsening : nullptr);

  if (config.c1.empty() || config.c2.empty()) throw ValidationError("the contrast needs --c1 and --c2");
  Contrast contrast{parse_exposure(config.c1, config.exposure, attribute.levels()),
                    parse_exposure(config.c2, config.exposure, attribute.levels())};
  Design design = build_design(config, table);

  TestStatisticSpec spec;
  spec.kind = config.statistic;
  spec.direction = config.direction;
  if (!config.strata_column.empty()) spec.strata = table.category_column(config.strata_column);
  if (config.statistic == StatisticKind::stratified_diff && spec.strata.empty())
    throw ValidationError("stratified-diff needs --strata-column");
  for (const auto& name : config.covariates) spec.covariates.push_back(table.numeric_column(name));
  if (config.statistic == StatisticKind::residual_adjusted && spec.covariates.empty())
    throw ValidationError("residual-adjusted needs --covariates");

  std::optional<AttributeCode> subgroup;
  if (config.subgroup) {
    subgroup = attribute.code_of(*config.subgroup);
    if (!subgroup) throw ValidationError("unknown subgroup attribute level '" + *config.subgroup + "'");
  }

  TestOptions options;
  options.permutations = config.permutations;
  options.seed = config.seed;
  options.estimator = config.estimator;
  options.threads = config.threads;
  return PreparedAnalysis{std::move(experiment), std::move(design), std::move(contrast), std::move(spec),
                          subgroup, std::move(coarsening), options};
}

std::vector<std::pair<std::size_t, std::size_t>> focal_tally(const Experiment& experiment, const Contrast& contrast) {
  std::vector<std::pair<std::size_t, std::size_t>> tally(experiment.attribute.alphabet_size(), {0, 0});
  for (std::size_t i = 0; i < experiment.size(); ++i) {
    auto& t = tally[static_cast<std::size_t>(experiment.attribute[i])];
    if (experiment.exposures[i] == contrast.c1) ++t.first;
    if (experiment.exposures[i] == contrast.c2) ++t.second;
  }
  return tally;
}

void check_focal_tally(const std::string& expected, const Experiment& experiment, const Contrast& contrast) {
  const auto tally = focal_tally(experiment, contrast);
  for (const auto& item : split_list(expected)) {
    const auto colon = item.find(':');
    const auto slash = item.find('/');
    if (colon == std::string::npos || slash == std::string::npos || slash < colon)
      throw ValidationError("focal tally must look like level:n1/n2,..., got '" + item + "'");
    const std::string level = item.substr(0, colon);
    const auto code = experiment.attribute.code_of(level);
    if (!code) throw ValidationError("focal tally names unknown attribute level '" + level + "'");
    const auto n1 = parse_real(item.substr(colon + 1, slash - colon - 1));
    const auto n2 = parse_real(item.substr(slash + 1));
    if (!n1 || !n2) throw ValidationError("focal tally must look like level:n1/n2,..., got '" + item + "'");
    const auto& got = tally[static_cast<std::size_t>(*code)];
    if (static_cast<double>(got.first) != *n1 || static_cast<double>(got.second) != *n2)
      throw ValidationError("focal tally for attribute " + level + " is " + std::to_string(got.first) + "/" +
                            std::to_string(got.second) + ", expected " + item.substr(colon + 1));
  }
}

namespace {

Json focal_json(const Experiment& experiment, const Contrast& contrast) {
  const auto& levels = experiment.attribute.levels();
  const auto tally = focal_tally(experiment, contrast);
  Json by_level = Json::object();
  std::size_t n1 = 0, n2 = 0;
  for (std::size_t a = 0; a < tally.size(); ++a) {
    by_level[levels[a]] = Json{{"n_c1", tally[a].first}, {"n_c2", tally[a].second}};
    n1 += tally[a].first;
    n2 += tally[a].second;
  }
  return Json{{"c1", contrast.c1.to_string(levels)},
              {"c2", contrast.c2.to_string(levels)},
              {"n_c1", n1},
              {"n_c2", n2},
              {"by_attribute", by_level}};
}

ShiftGrid grid_for(const AnalysisConfig& config, const PreparedAnalysis& p) {
  if (config.grid) return ShiftGrid::range(config.grid->lo, config.grid->hi, config.grid->step);
  return default_grid(p.experiment, p.contrast, p.subgroup);
}

Json curve_json(const PValueCurve& curve) {
  Json out = Json::array();
  for (const auto& pt : curve) out.push_back(Json{{"shift", pt.shift}, {"p_value", pt.p_value}});
  return out;
}

}  // namespace

Json run(const AnalysisConfig& config, const ExperimentTable& table, RunArtifacts* artifacts) {
  const PreparedAnalysis p = prepare(config, table);
  if (!config.expect_focal_tally.empty()) check_focal_tally(config.expect_focal_tally, p.experiment, p.contrast);

  Json report;
  report["tool"] = "peerperm";
  report["version"] = kVersion;
  report["command"] = config.command;
  report["config"] = config_to_json(config);
  report["data"] = data_summary(p.experiment, table);
  report["focal"] = focal_json(p.experiment, p.contrast);

  if (config.command == "test-sharp") {
    if (config.subgroup) throw ValidationError("--subgroup applies to pairwise nulls only");
    const auto result = test_sharp(p.experiment, p.design, p.contrast, p.spec, p.options);
    report["result"] = to_json(result);
    report["result"]["null"] = "sharp";
    if (artifacts) artifacts->null_draws = result.null_draws;
  } else if (config.command == "test-pairwise") {
    if (config.shift == 0.0) {
      const auto result = test_pairwise(p.experiment, p.design, p.contrast, p.spec, p.options, p.subgroup);
      report["result"] = to_json(result);
      report["result"]["null"] = "pairwise";
      if (artifacts) artifacts->null_draws = result.null_draws;
    } else {
      const double pv = shift_test(p.experiment, p.design, p.contrast, config.shift, p.spec, p.options, p.subgroup);
      report["result"] = Json{{"null", "shift"},
                              {"shift", config.shift},
                              {"p_value", pv},
                              {"replicates", p.options.permutations},
                              {"estimator", to_string(p.options.estimator)},
                              {"direction", to_string(p.spec.direction)},
                              {"seed", p.options.seed}};
    }
  } else if (config.command == "hl" || config.command == "ci") {
    const auto grid = grid_for(config, p);
    const auto curve = shift_curve(p.experiment, p.design, p.contrast, grid, p.spec, p.options, p.subgroup);
    if (artifacts) artifacts->curve = curve;
    if (config.command == "hl") {
      report["result"] = Json{{"hl_estimate", hl_estimate(curve)},
                              {"grid", Json{{"lo", grid.points.front()},
                                            {"hi", grid.points.back()},
                                            {"points", grid.points.size()}}},
                              {"curve", curve_json(curve)}};
    } else {
      report["result"] = to_json(invert_ci(curve, config.alpha), true);
    }
    report["result"]["replicates"] = p.options.permutations;
    report["result"]["seed"] = p.options.seed;
  } else {
    throw ValidationError("unknown analysis command '" + config.command + "'");
  }
  return report;
}

Json data_summary(const Experiment& experiment, const ExperimentTable& table) {
  const auto& levels = experiment.attribute.levels();
  const std::size_t groups = experiment.labels.num_groups();
  Json counts = Json::object();
  Json by_group = Json::object();
  std::vector<std::vector<std::size_t>> tally(levels.size(), std::vector<std::size_t>(groups, 0));
  for (std::size_t i = 0; i < experiment.size(); ++i)
    ++tally[static_cast<std::size_t>(experiment.attribute[i])][static_cast<std::size_t>(experiment.labels[i])];
  for (std::size_t a = 0; a < levels.size(); ++a) {
    counts[levels[a]] = experiment.attribute.count(static_cast<AttributeCode>(a));
    by_group[levels[a]] = tally[a];
  }
  return Json{{"units", experiment.size()},
              {"groups", groups},
              {"group_ids", table.group_ids},
              {"attribute_levels", levels},
              {"attribute_counts", counts},
              {"attribute_by_group", by_group}};
}

Json to_json(const TestResult& r) {
  return Json{{"statistic_obs", r.statistic_obs}, {"p_value", r.p_value},
              {"replicates", r.replicates},       {"estimator", to_string(r.estimator)},
              {"direction", to_string(r.direction)}, {"seed", r.seed},
              {"focal_c1", r.focal_c1},           {"focal_c2", r.focal_c2}};
}

Json to_json(const ConfidenceInterval& ci, bool include_curve) {
  Json j{{"level", ci.level},
         {"lower", ci.lower},
         {"upper", ci.upper},
         {"hl_estimate", ci.hl_estimate},
         {"contiguous", ci.contiguous}};
  if (include_curve) j["curve"] = curve_json(ci.curve);
  return j;
}

Json to_json(const SimReport& report) {
  Json summary = Json::object();
  for (const auto& [k, v] : report.summary) summary[k] = v;
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json r = Json::object();
    for (std::size_t c = 0; c < report.columns.size(); ++c) r[report.columns[c]] = row[c];
    rows.push_back(r);
  }
  return Json{{"study", report.study}, {"rows", rows}, {"summary", summary}};
}

Json to_json(const ExactDistribution& law, std::span<const std::string> levels) {
  Json atoms = Json::array();
  for (const auto& [w, p] : law.atoms) {
    Json ws = Json::array();
    for (const auto& e : w) ws.push_back(e.to_string(levels));
    atoms.push_back(Json{{"exposures", ws}, {"probability", p.str()}});
  }
  return Json{{"support_size", law.support_size()}, {"atoms", atoms}};
}

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_draws_csv(std::ostream& out, std::span<const double> draws) {
  out << "replicate,statistic\n";
  for (std::size_t l = 0; l < draws.size(); ++l) out << l << ',' << format_number(draws[l]) << '\n';
}

void write_curve_csv(std::ostream& out, const PValueCurve& curve) {
  out << "shift,p_value\n";
  for (const auto& pt : curve) out << format_number(pt.shift) << ',' << format_number(pt.p_value) << '\n';
}

void write_sim_csv(std::ostream& out, const SimReport& report) {
  for (std::size_t c = 0; c < report.columns.size(); ++c) out << (c ? "," : "") << report.columns[c];
  out << '\n';
  for (const auto& row : report.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
    out << '\n';
  }
}

}  // namespace peerperm
