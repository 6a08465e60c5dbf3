#pragma once

#include <map>
#include <string>
#include <vector>

#include "hdnsm/bootstrap.hpp"
#include "hdnsm/dataset.hpp"
#include "hdnsm/dose_response.hpp"
#include "hdnsm/simulation.hpp"

namespace hdnsm {

struct ColumnRoles {
  std::string outcome = "y";
  std::string treatment = "t";
  std::vector<std::string> controls;  // empty means "all other columns"
};

Dataset load_csv_dataset(const std::string& path, const ColumnRoles& roles);
void write_dataset_csv(const std::string& path, const Dataset& data);

enum class RunMode { Simulate, Estimate, Bootstrap, McStudy };

struct RunConfig {
  RunMode mode = RunMode::Estimate;
  std::string input_path;
  std::string output_dir = ".";
  ColumnRoles columns;
  TuningConfig tuning;
  MultiplierKind multiplier = MultiplierKind::Exponential;
  int bootstrap_reps = 200;
  DgpConfig dgp;
  McStudyConfig study;
  std::vector<double> tau_list = {0.25, 0.5, 0.75};
  double ci_alpha = 0.05;
  bool use_post_lasso = true;
  std::uint64_t seed = 1;
  ExecMode exec = ExecMode::parallel;
};

// Flat key=value file; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const std::string& path);
void apply_config(RunConfig& config, const std::map<std::string, std::string>& kv);
void validate_config(const RunConfig& config);

// Dispatches the four modes and writes curves.csv, alpha.csv, selection.csv,
// report.json (and data.csv / mc_report.csv where applicable). Returns the
// process exit status.
int run(const RunConfig& config);

void write_mc_report_csv(const std::string& path, const McReport& report);

}  // namespace hdnsm
