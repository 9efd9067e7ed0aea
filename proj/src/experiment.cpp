#include "kaclab/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <unistd.h>

#ifndef KACLAB_BUILD_ID
#define KACLAB_BUILD_ID "unknown"
#endif

namespace kaclab {

void ExperimentConfig::validate() const {
  if (experiment.empty())
    throw UsageError("missing-experiment", "no experiment name given");
  if (n < 2) throw UsageError("invalid-parameter", "n >= 2 required");
  if (!(c1 > 10.0)) throw UsageError("invalid-parameter", "C1 > 10 required");
  if (num_replicas < 1)
    throw UsageError("invalid-parameter", "replicas >= 1 required");
  if (num_samples < 1)
    throw UsageError("invalid-parameter", "samples >= 1 required");
  if (!seed.has_value())
    throw UsageError("missing-seed",
                     "seed is mandatory; pass --seed or set seed= in the config");
}

std::uint64_t ExperimentConfig::seed_value() const {
  if (!seed.has_value())
    throw UsageError("missing-seed", "seed is mandatory");
  return *seed;
}

double ExperimentConfig::tolerance(const std::string& name,
                                   double fallback) const {
  auto it = tolerances.find(name);
  return it == tolerances.end() ? fallback : it->second;
}

double ExperimentConfig::param(const std::string& name, double fallback) const {
  auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value) {
  auto as_double = [&](const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw UsageError("invalid-parameter",
                       "config value for '" + key + "' is not numeric: " + v);
    }
  };
  if (key == "experiment")
    cfg.experiment = value;
  else if (key == "out")
    cfg.out_dir = value;
  else if (key == "n")
    cfg.n = static_cast<int>(as_double(value));
  else if (key == "c1")
    cfg.c1 = as_double(value);
  else if (key == "replicas")
    cfg.num_replicas = static_cast<int>(as_double(value));
  else if (key == "samples")
    cfg.num_samples = static_cast<long>(as_double(value));
  else if (key == "workers")
    cfg.workers = static_cast<int>(as_double(value));
  else if (key == "seed")
    cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key.rfind("tol.", 0) == 0)
    cfg.tolerances[key.substr(4)] = as_double(value);
  else
    cfg.params[key] = as_double(value);
}

ExperimentConfig parse_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in)
    throw UsageError("unreadable-config", "cannot open config file " + file.string());
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw UsageError("invalid-config",
                         "line " + std::to_string(lineno) + ": expected key=value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    apply_config_line(cfg, key, value);
  }
  return cfg;
}

nlohmann::json to_json(const TestReport& report) {
  nlohmann::json j{{"name", report.name},
                   {"statistic", report.statistic},
                   {"threshold", report.threshold},
                   {"verdict", report.pass ? "pass" : "fail"},
                   {"num_samples", report.num_samples},
                   {"seed", report.seed}};
  if (report.p_value) j["p_value"] = *report.p_value;
  return j;
}

TestReport test_report_from_json(const nlohmann::json& j) {
  TestReport report;
  report.name = j.at("name").get<std::string>();
  report.statistic = j.at("statistic").get<double>();
  report.threshold = j.at("threshold").get<double>();
  report.pass = j.at("verdict").get<std::string>() == "pass";
  report.num_samples = j.at("num_samples").get<long>();
  report.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("p_value")) report.p_value = j["p_value"].get<double>();
  return report;
}

namespace {

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  return nlohmann::json{{"experiment", cfg.experiment},
                        {"n", cfg.n},
                        {"c1", cfg.c1},
                        {"replicas", cfg.num_replicas},
                        {"samples", cfg.num_samples},
                        {"seed", cfg.seed_value()},
                        {"out", cfg.out_dir.string()},
                        {"workers", cfg.workers},
                        {"tolerances", cfg.tolerances},
                        {"params", cfg.params}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.experiment = j.at("experiment").get<std::string>();
  cfg.n = j.at("n").get<int>();
  cfg.c1 = j.at("c1").get<double>();
  cfg.num_replicas = j.at("replicas").get<int>();
  cfg.num_samples = j.at("samples").get<long>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.out_dir = j.at("out").get<std::string>();
  cfg.workers = j.at("workers").get<int>();
  cfg.tolerances = j.at("tolerances").get<std::map<std::string, double>>();
  cfg.params = j.at("params").get<std::map<std::string, double>>();
  return cfg;
}

}  // namespace

nlohmann::json to_json(const ExperimentRecord& record) {
  nlohmann::json reports = nlohmann::json::array();
  for (const TestReport& r : record.reports) reports.push_back(to_json(r));
  return nlohmann::json{{"config", config_to_json(record.config)},
                        {"build_id", record.build_id},
                        {"started_at", record.started_at},
                        {"finished_at", record.finished_at},
                        {"metrics", record.metrics},
                        {"reports", reports},
                        {"verdict", record.verdict},
                        {"notes", record.notes}};
}

ExperimentRecord record_from_json(const nlohmann::json& j) {
  ExperimentRecord record;
  record.config = config_from_json(j.at("config"));
  record.build_id = j.at("build_id").get<std::string>();
  record.started_at = j.at("started_at").get<std::string>();
  record.finished_at = j.at("finished_at").get<std::string>();
  record.metrics = j.at("metrics").get<std::map<std::string, double>>();
  for (const auto& r : j.at("reports"))
    record.reports.push_back(test_report_from_json(r));
  record.verdict = j.at("verdict").get<std::string>();
  record.notes = j.at("notes").get<std::vector<std::string>>();
  return record;
}

std::string current_utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string build_identifier() { return KACLAB_BUILD_ID; }

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path tmp =
      path.string() + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw UsageError("unwritable-output",
                       "cannot write to " + tmp.string());
    out << content;
    if (!out.flush())
      throw UsageError("unwritable-output", "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string render_csv(const CsvTable& table) {
  std::ostringstream out;
  out << "# kaclab-csv v1\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << (c ? "," : "") << table.columns[c];
  out << "\n";
  out.precision(17);
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
  return out.str();
}

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# kaclab-csv", 0) != 0)
    throw std::runtime_error("parse_csv: missing kaclab-csv header");
  CsvTable table;
  if (!std::getline(in, line)) return table;
  std::istringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::vector<double> values;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
    table.rows.push_back(std::move(values));
  }
  return table;
}

ExperimentRecord run_experiment(const ExperimentConfig& config) {
  ExperimentResult result = run_experiment_in_memory(config);

  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  const std::string stem =
      config.experiment + "-" + std::to_string(config.seed_value());
  write_text_atomic(config.out_dir / (stem + ".json"),
                    to_json(result.record).dump(2) + "\n");
  if (!result.csv.columns.empty())
    write_text_atomic(config.out_dir / (stem + ".csv"), render_csv(result.csv));
  return result.record;
}

}  // namespace kaclab
