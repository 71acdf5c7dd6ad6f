// Monte Carlo experiment orchestration: deterministic parameter sweeps,
// flat result records, scaling-law fits, grouped summaries and JSONL/CSV
// persistence.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "covren/renewal.hpp"

namespace covren {

enum class Scenario { kBufferOnly, kInsertion, kTiming, kDetectSweep, kKlSweep };

std::string scenario_name(Scenario scenario);
Scenario scenario_from_name(const std::string& name);

// One flat record per (grid point, trial). Values are numbers or booleans;
// infeasible grid points carry an "error" string instead of outcomes.
using ResultRecord = nlohmann::ordered_json;

struct ExperimentConfig {
  Scenario scenario = Scenario::kInsertion;
  RenewalSpec spec = RenewalSpec::exponential(1.0);
  // Parameter name -> value list. Recognized names per scenario:
  //   buffer_only:  N, epsilon
  //   insertion:    N, epsilon, zeta
  //   timing:       N, epsilon, zeta, mu, n, M
  //   detect_sweep: N, alpha, epsilon, rho_exponent   (rho = epsilon * N^exp)
  //   kl_sweep:     n, epsilon                        (rho = epsilon)
  std::map<std::string, std::vector<double>> grid;
  std::int64_t trials = 1;
  std::uint64_t base_seed = 0;
  std::string output_path;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Canonical textual encoding of a grid point: keys in lexicographic order,
// "key=<%.17g>" joined with ';'. The per-trial seed is
//   base_seed XOR fnv1a64(encoding + ";trial=<index>").
std::string canonical_grid_point(const std::map<std::string, double>& point);
std::uint64_t trial_seed(std::uint64_t base_seed, const std::string& point_key,
                         std::int64_t trial);

// Executes every (grid point, trial) pair and returns the records in
// canonical order (grid point key, then trial). Trials run in parallel;
// the ordering never depends on scheduling. Infeasible points produce
// error records and the sweep continues.
std::vector<ResultRecord> run_sweep(const ExperimentConfig& config);

// Streaming variant: appends each completed grid point to config.output_path
// (JSON-lines). When the file already holds complete points from an earlier
// run of the same config they are kept, so an interrupted sweep resumes at
// grid-point granularity. Returns the full sorted record set.
std::vector<ResultRecord> run_sweep_to_file(const ExperimentConfig& config);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points_used = 0;
  int points_dropped = 0;  // groups with no usable or nonpositive mean
};

// Least squares of log(mean of y) on log(x) across the distinct values of
// grid parameter x. Needs at least three usable x values.
FitResult fit_scaling(const std::vector<ResultRecord>& records,
                      const std::string& x_name, const std::string& y_name);

struct SummaryRow {
  std::map<std::string, double> group;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (0 for a single record)
  double ci95 = 0.0;    // 1.96 * stddev / sqrt(count)
  std::int64_t count = 0;
};

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records,
                                  const std::vector<std::string>& group_by,
                                  const std::string& value);

void write_records_jsonl(const std::string& path,
                         const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_records_jsonl(const std::string& path);
// Header from the union of keys in first-seen order; missing cells empty.
void write_records_csv(const std::string& path,
                       const std::vector<ResultRecord>& records);

}  // namespace covren
