#pragma once

// CSV ingestion, analysis configuration and structured reports.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "peerperm/estimation.hpp"
#include "peerperm/inference.hpp"
#include "peerperm/oracle.hpp"
#include "peerperm/simharness.hpp"

namespace peerperm {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

struct CsvSchema {
  std::string unit_id = "unit_id";
  std::string attribute = "attribute";
  std::string group = "group";
  std::string outcome = "outcome";
  /// Attribute alphabet; when empty it must come from a "# attribute_levels=..." line.
  std::vector<std::string> attribute_levels;
  /// When false the outcome column may be absent (oracle commands).
  bool require_outcome = true;
};

struct ExperimentTable {
  std::vector<std::string> unit_ids;
  AttributeVector attribute;
  /// Original group ids; index k is group label k (order of first appearance).
  std::vector<std::string> group_ids;
  GroupLabelAssignment labels;
  std::vector<double> outcomes;
  /// Remaining columns, raw text, in header order.
  std::vector<std::string> extra_names;
  std::vector<std::vector<std::string>> extra_columns;

  std::size_t size() const { return unit_ids.size(); }
  const std::vector<std::string>& column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
  /// Codes by order of first appearance.
  std::vector<int> category_column(const std::string& name) const;
};

ExperimentTable parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source = "<input>");
ExperimentTable load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Two columns per line: canonical exposure text and its label. A header line
/// "exposure,label" is skipped.
CoarseningMap load_coarsening_map(const std::filesystem::path& path, ExposureKind base_kind,
                                  std::span<const std::string> levels);

std::vector<std::string> split_list(const std::string& text, char sep = ',');

enum class DesignChoice { observed, sr, cr };

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
};
GridSpec parse_grid(const std::string& text);

struct AnalysisConfig {
  std::string command;  // test-sharp, test-pairwise, hl, ci
  ExposureKind exposure = ExposureKind::count;
  /// Exposure kind the coarsening map is keyed on.
  ExposureKind base_exposure = ExposureKind::multiset;
  std::string coarsen_map;
  std::string c1;
  std::string c2;
  std::optional<std::string> subgroup;
  StatisticKind statistic = StatisticKind::diff_in_means;
  Direction direction = Direction::two_sided;
  PValueEstimator estimator = PValueEstimator::valid;
  std::size_t permutations = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::optional<GridSpec> grid;
  double shift = 0.0;
  DesignChoice design = DesignChoice::observed;
  std::string stratify_on;
  std::string strata_column;
  std::vector<std::string> covariates;
  std::string expect_focal_tally;
  /// Not echoed: reports do not depend on it.
  unsigned threads = 0;
};

Json config_to_json(const AnalysisConfig& config);
AnalysisConfig config_from_json(const Json& j);
/// key=value lines; '#' starts a comment. Keys use the long flag names without dashes.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

std::string to_string(ExposureKind kind);
std::string to_string(StatisticKind kind);
std::string to_string(Direction direction);
std::string to_string(PValueEstimator estimator);
std::string to_string(DesignChoice design);
ExposureKind parse_exposure_kind(const std::string& text);
StatisticKind parse_statistic(const std::string& text);
Direction parse_direction(const std::string& text);
PValueEstimator parse_estimator(const std::string& text);
DesignChoice parse_design(const std::string& text);

/// Everything a command needs, resolved against a table.
struct PreparedAnalysis {
  Experiment experiment;
  Design design;
  Contrast contrast;
  TestStatisticSpec spec;
  std::optional<AttributeCode> subgroup;
  std::optional<CoarseningMap> coarsening;
  TestOptions options;
};

/// Coarsening table named by the config, or nullopt for uncoarsened exposures.
std::optional<CoarseningMap> build_coarsening(const AnalysisConfig& config, std::span<const std::string> levels);
/// SR (optionally on B = (A, column)) or CR design matching the observed tallies.
Design build_design(const AnalysisConfig& config, const ExperimentTable& table);

PreparedAnalysis prepare(const AnalysisConfig& config, const ExperimentTable& table);

/// Per attribute level, the number of focal units exposed to c1 and to c2.
std::vector<std::pair<std::size_t, std::size_t>> focal_tally(const Experiment& experiment, const Contrast& contrast);

/// Checks "level:n1/n2,..." against the focal tally; throws ValidationError on mismatch.
void check_focal_tally(const std::string& expected, const Experiment& experiment, const Contrast& contrast);

/// Runs a test-sharp, test-pairwise, hl or ci analysis and returns its report.
/// Null draws and p-value curves are returned through the optional outputs.
struct RunArtifacts {
  std::vector<double> null_draws;
  PValueCurve curve;
};
Json run(const AnalysisConfig& config, const ExperimentTable& table, RunArtifacts* artifacts = nullptr);

// Report pieces.
Json data_summary(const Experiment& experiment, const ExperimentTable& table);
Json to_json(const TestResult& result);
Json to_json(const ConfidenceInterval& ci, bool include_curve);
Json to_json(const SimReport& report);
Json to_json(const ExactDistribution& law, std::span<const std::string> levels);

void write_draws_csv(std::ostream& out, std::span<const double> draws);
void write_curve_csv(std::ostream& out, const PValueCurve& curve);
void write_sim_csv(std::ostream& out, const SimReport& report);

/// Fixed-format number text shared by JSON and CSV writers (17 significant digits).
std::string format_number(double value);

}  // namespace peerperm
