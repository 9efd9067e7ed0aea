#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kaclab/stats.hpp"

namespace kaclab {

/// Raised for malformed invocations: unknown experiment, bad parameters,
/// unusable output directory. Maps to CLI exit code 2.
struct UsageError : std::runtime_error {
  std::string code;  // machine-readable kind
  UsageError(std::string code_, const std::string& what_)
      : std::runtime_error(what_), code(std::move(code_)) {}
};

struct ExperimentConfig {
  std::string experiment;
  int n = 4;
  double c1 = 12.0;
  int num_replicas = 200;
  long num_samples = 10000;
  std::optional<std::uint64_t> seed;  // mandatory; no wall-clock default
  std::filesystem::path out_dir = "out";
  int workers = 0;  // 0 = hardware concurrency
  std::map<std::string, double> tolerances;
  std::map<std::string, double> params;

  void validate() const;  // throws UsageError
  std::uint64_t seed_value() const;
  double tolerance(const std::string& name, double fallback) const;
  double param(const std::string& name, double fallback) const;
};

/// Flat key=value file; '#' starts a comment. Keys tol.* land in
/// tolerances, reserved keys in their fields, everything else in params.
ExperimentConfig parse_config_file(const std::filesystem::path& file);
void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value);

struct ExperimentRecord {
  ExperimentConfig config;
  std::string build_id;
  std::string started_at;
  std::string finished_at;
  std::map<std::string, double> metrics;
  std::vector<TestReport> reports;
  std::string verdict;  // "pass" | "fail" | "refused"
  std::vector<std::string> notes;

  bool passed() const { return verdict == "pass"; }
};

nlohmann::json to_json(const TestReport& report);
TestReport test_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentRecord& record);
ExperimentRecord record_from_json(const nlohmann::json& j);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentResult {
  ExperimentRecord record;
  CsvTable csv;
};

std::vector<std::string> experiment_names();

/// Dispatches to the named experiment, writes <out>/<name>-<seed>.json and
/// .csv atomically (temp file + rename) and returns the record. Nothing is
/// written when the experiment name or parameters are rejected.
ExperimentRecord run_experiment(const ExperimentConfig& config);

/// The experiment body without the I/O, for in-process callers.
ExperimentResult run_experiment_in_memory(const ExperimentConfig& config);

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);
std::string render_csv(const CsvTable& table);  // "# kaclab-csv v1" header
CsvTable parse_csv(const std::string& text);

std::string current_utc_timestamp();
std::string build_identifier();

/// Summary of run_experiment records found in a directory.
struct ReportSummary {
  std::string text;
  int records = 0;
  int corrupt = 0;
  int failed = 0;
};

ReportSummary report_directory(const std::filesystem::path& dir,
                               bool write_svg);

}  // namespace kaclab
