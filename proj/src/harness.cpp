#include "covren/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "covren/detectors.hpp"
#include "covren/insertion.hpp"
#include "covren/timing.hpp"

namespace covren {

std::string scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::kBufferOnly: return "buffer_only";
    case Scenario::kInsertion: return "insertion";
    case Scenario::kTiming: return "timing";
    case Scenario::kDetectSweep: return "detect_sweep";
    case Scenario::kKlSweep: return "kl_sweep";
  }
  throw std::logic_error("scenario_name: unknown scenario");
}

Scenario scenario_from_name(const std::string& name) {
  for (Scenario s : {Scenario::kBufferOnly, Scenario::kInsertion,
                     Scenario::kTiming, Scenario::kDetectSweep,
                     Scenario::kKlSweep}) {
    if (scenario_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown scenario: " + name);
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["scenario"] = scenario_name(config.scenario);
  j["spec"] = {{"family", family_name(config.spec.family())},
               {"params", config.spec.params()},
               {"scale_factor", config.spec.scale_factor()}};
  j["grid"] = config.grid;
  j["trials"] = config.trials;
  j["base_seed"] = config.base_seed;
  j["output_path"] = config.output_path;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c{
      scenario_from_name(j.at("scenario").get<std::string>()),
      RenewalSpec(family_from_name(j.at("spec").at("family").get<std::string>()),
                  j.at("spec").at("params").get<std::vector<double>>(),
                  j.at("spec").value("scale_factor", 1.0)),
      j.at("grid").get<std::map<std::string, std::vector<double>>>(),
      j.at("trials").get<std::int64_t>(),
      j.at("base_seed").get<std::uint64_t>(),
      j.value("output_path", std::string())};
  if (c.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

std::string canonical_grid_point(const std::map<std::string, double>& point) {
  std::string out;
  for (const auto& [key, value] : point) {  // std::map iterates in key order
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    if (!out.empty()) out += ';';
    out += key;
    out += '=';
    out += buf;
  }
  return out;
}

std::uint64_t trial_seed(std::uint64_t base_seed, const std::string& point_key,
                         std::int64_t trial) {
  return base_seed ^ fnv1a64(point_key + ";trial=" + std::to_string(trial));
}

namespace {

const std::map<Scenario, std::vector<std::string>>& scenario_keys() {
  static const std::map<Scenario, std::vector<std::string>> keys = {
      {Scenario::kBufferOnly, {"N", "epsilon"}},
      {Scenario::kInsertion, {"N", "epsilon", "zeta"}},
      {Scenario::kTiming, {"N", "epsilon", "zeta", "mu", "n", "M"}},
      {Scenario::kDetectSweep, {"N", "alpha", "epsilon", "rho_exponent"}},
      {Scenario::kKlSweep, {"n", "epsilon"}},
  };
  return keys;
}

void validate_grid(const ExperimentConfig& config) {
  const auto& expected = scenario_keys().at(config.scenario);
  for (const auto& [key, values] : config.grid) {
    if (std::find(expected.begin(), expected.end(), key) == expected.end()) {
      throw std::invalid_argument("sweep: parameter '" + key +
                                  "' is not recognized by scenario " +
                                  scenario_name(config.scenario));
    }
    if (values.empty()) {
      throw std::invalid_argument("sweep: parameter '" + key + "' has no values");
    }
  }
  for (const std::string& key : expected) {
    if (!config.grid.count(key)) {
      throw std::invalid_argument("sweep: scenario " +
                                  scenario_name(config.scenario) +
                                  " needs parameter '" + key + "'");
    }
  }
}

std::vector<std::map<std::string, double>> expand_grid(
    const std::map<std::string, std::vector<double>>& grid) {
  std::vector<std::map<std::string, double>> points{{}};
  for (const auto& [key, values] : grid) {
    std::vector<std::map<std::string, double>> next;
    next.reserve(points.size() * values.size());
    for (const auto& base : points) {
      for (double v : values) {
        auto p = base;
        p[key] = v;
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return points;
}

ResultRecord base_record(const ExperimentConfig& config,
                         const std::map<std::string, double>& point,
                         std::int64_t trial, std::uint64_t seed) {
  ResultRecord r;
  r["scenario"] = scenario_name(config.scenario);
  for (const auto& [key, value] : point) r[key] = value;
  r["trial"] = trial;
  r["seed"] = seed;
  return r;
}

ResultRecord run_trial(const ExperimentConfig& config,
                       const std::map<std::string, double>& point,
                       std::int64_t trial, std::uint64_t seed, double c) {
  ResultRecord r = base_record(config, point, trial, seed);
  const RenewalSpec& spec = config.spec;
  switch (config.scenario) {
    case Scenario::kBufferOnly: {
      const auto n = static_cast<std::int64_t>(point.at("N"));
      const double rho = standalone_buffering_rho(n, point.at("epsilon"), c);
      const Eigen::ArrayXd tau = cumulative_sum(
          sample_interarrivals(spec, n, derive_seed(seed, 1)));
      const BufferingResult buffered = buffering_phase(tau, rho);
      r["rho"] = rho;
      r["m"] = buffered.buffered_count;
      r["released"] = static_cast<std::int64_t>(buffered.released.arrivals.size());
      break;
    }
    case Scenario::kInsertion: {
      const InsertionResult res =
          run_insertion(spec, static_cast<std::int64_t>(point.at("N")),
                        point.at("epsilon"), point.at("zeta"), seed);
      r["psi"] = res.psi;
      r["rho_insert"] = res.rho_insert;
      r["m"] = res.buffered_m;
      r["Nc"] = res.covert_inserted_Nc;
      r["No"] = res.overt_sent_No;
      r["Noc"] = res.total_second_phase_Noc;
      r["K"] = res.walk_steps_K;
      r["failed"] = res.failed;
      break;
    }
    case Scenario::kTiming: {
      const TimingResult res = run_timing(
          spec, static_cast<std::int64_t>(point.at("N")), point.at("epsilon"),
          point.at("zeta"), point.at("mu"),
          static_cast<std::int64_t>(point.at("n")),
          static_cast<std::int64_t>(point.at("M")), seed);
      r["psi"] = res.plan.psi;
      r["m"] = res.buffered_m;
      r["message"] = res.message;
      r["decoded"] = res.decoded;
      r["decoded_ok"] = res.decoded_ok;
      r["failed_buffer"] = res.failed_buffer;
      r["bits_sent"] = res.bits_sent;
      break;
    }
    case Scenario::kDetectSweep: {
      const auto n = static_cast<std::int64_t>(point.at("N"));
      const double rho =
          point.at("epsilon") * std::pow(static_cast<double>(n),
                                         point.at("rho_exponent"));
      if (!(rho > 0.0 && rho < 1.0)) {
        throw InfeasibleError("detect_sweep: rho outside (0, 1)");
      }
      DetectorConfig dc;
      dc.alpha = point.at("alpha");
      dc.n_obs = n;
      dc.lambda0 = rate(spec);
      dc.sigma2 = variance(spec);
      const RenewalSpec alt = scale_stretch(spec, rho);
      const TestOutcome h0 = sum_threshold_test(
          sample_interarrivals(spec, n, derive_seed(seed, 1)), dc);
      const TestOutcome h1 = sum_threshold_test(
          sample_interarrivals(alt, n, derive_seed(seed, 2)), dc);
      r["rho"] = rho;
      r["sum_dec_h0"] = h0.decision == Decision::kH1;
      r["sum_dec_h1"] = h1.decision == Decision::kH1;
      break;
    }
    case Scenario::kKlSweep: {
      const auto n = static_cast<std::int64_t>(point.at("n"));
      const double rho = point.at("epsilon");
      if (!(rho > 0.0 && rho < 1.0)) {
        throw InfeasibleError("kl_sweep: rho outside (0, 1)");
      }
      const RenewalSpec alt = scale_stretch(spec, rho);
      const TestOutcome h0 = likelihood_ratio_test(
          sample_interarrivals(spec, n, derive_seed(seed, 1)), spec, alt);
      const TestOutcome h1 = likelihood_ratio_test(
          sample_interarrivals(alt, n, derive_seed(seed, 2)), spec, alt);
      r["rho"] = rho;
      r["kl"] = kl_divergence(spec, alt);
      r["kl_small_rho"] = kl_small_rho(spec, rho);
      r["bound"] = kl_error_lower_bound(spec, alt, n);
      r["lrt_dec_h0"] = h0.decision == Decision::kH1;
      r["lrt_dec_h1"] = h1.decision == Decision::kH1;
      break;
    }
  }
  return r;
}

// Outcome fields may be numeric or boolean (e.g. "failed"); summaries and
// fits treat booleans as 0/1.
double as_number(const nlohmann::ordered_json& v) {
  if (v.is_boolean()) return v.get<bool>() ? 1.0 : 0.0;
  return v.get<double>();
}

bool record_sort_less(const ResultRecord& a, const ResultRecord& b) {
  const std::string ka = a.value("_point", "");
  const std::string kb = b.value("_point", "");
  if (ka != kb) return ka < kb;
  return a.value("trial", std::int64_t{0}) < b.value("trial", std::int64_t{0});
}

std::vector<ResultRecord> run_point(const ExperimentConfig& config,
                                    const std::map<std::string, double>& point,
                                    const std::string& point_key, double c) {
  std::vector<ResultRecord> records(config.trials);
  parallel_for(config.trials, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t t = begin; t < end; ++t) {
      const std::uint64_t seed = trial_seed(config.base_seed, point_key, t);
      try {
        records[t] = run_trial(config, point, t, seed, c);
      } catch (const std::exception& err) {
        ResultRecord r = base_record(config, point, t, seed);
        r["error"] = err.what();
        records[t] = std::move(r);
      }
      records[t]["_point"] = point_key;
    }
  });
  return records;
}

void strip_internal_keys(std::vector<ResultRecord>& records) {
  for (ResultRecord& r : records) r.erase("_point");
}

void attach_point_keys(std::vector<ResultRecord>& records,
                       const ExperimentConfig& config) {
  const auto& expected = scenario_keys().at(config.scenario);
  for (ResultRecord& r : records) {
    std::map<std::string, double> point;
    for (const std::string& key : expected) {
      if (r.contains(key)) point[key] = r[key].get<double>();
    }
    r["_point"] = canonical_grid_point(point);
  }
}

}  // namespace

std::vector<ResultRecord> run_sweep(const ExperimentConfig& config) {
  validate_grid(config);
  // The curvature constant gates feasibility once per sweep, not per trial.
  double c = 0.0;
  if (config.scenario == Scenario::kBufferOnly) {
    c = fisher_constant(config.spec);
  }
  std::vector<ResultRecord> all;
  for (const auto& point : expand_grid(config.grid)) {
    const std::string key = canonical_grid_point(point);
    std::vector<ResultRecord> batch = run_point(config, point, key, c);
    all.insert(all.end(), std::make_move_iterator(batch.begin()),
               std::make_move_iterator(batch.end()));
  }
  std::sort(all.begin(), all.end(), record_sort_less);
  strip_internal_keys(all);
  return all;
}

std::vector<ResultRecord> run_sweep_to_file(const ExperimentConfig& config) {
  validate_grid(config);
  if (config.output_path.empty()) {
    throw std::invalid_argument("run_sweep_to_file: output_path is empty");
  }
  const bool csv = config.output_path.size() > 4 &&
                   config.output_path.substr(config.output_path.size() - 4) == ".csv";
  double c = 0.0;
  if (config.scenario == Scenario::kBufferOnly) {
    c = fisher_constant(config.spec);
  }

  // Resume: keep grid points already complete in an existing JSONL file.
  std::map<std::string, std::vector<ResultRecord>> done;
  if (!csv && std::filesystem::exists(config.output_path)) {
    std::vector<ResultRecord> old = read_records_jsonl(config.output_path);
    attach_point_keys(old, config);
    std::map<std::string, std::vector<ResultRecord>> grouped;
    for (ResultRecord& r : old) {
      grouped[r["_point"].get<std::string>()].push_back(std::move(r));
    }
    for (auto& [key, records] : grouped) {
      if (static_cast<std::int64_t>(records.size()) == config.trials) {
        done.emplace(key, std::move(records));
      }
    }
  }

  std::vector<ResultRecord> all;
  std::ofstream stream;
  if (!csv) {
    stream.open(config.output_path + ".partial", std::ios::trunc);
    if (!stream) {
      throw std::runtime_error("run_sweep_to_file: cannot write near " +
                               config.output_path);
    }
  }
  for (const auto& point : expand_grid(config.grid)) {
    const std::string key = canonical_grid_point(point);
    std::vector<ResultRecord> batch;
    if (auto it = done.find(key); it != done.end()) {
      batch = std::move(it->second);
    } else {
      batch = run_point(config, point, key, c);
    }
    std::sort(batch.begin(), batch.end(), record_sort_less);
    if (!csv) {
      for (ResultRecord r : batch) {
        r.erase("_point");
        stream << r.dump() << '\n';
      }
      stream.flush();
    }
    all.insert(all.end(), std::make_move_iterator(batch.begin()),
               std::make_move_iterator(batch.end()));
  }
  std::sort(all.begin(), all.end(), record_sort_less);
  strip_internal_keys(all);
  if (csv) {
    write_records_csv(config.output_path, all);
  } else {
    stream.close();
    std::filesystem::rename(config.output_path + ".partial", config.output_path);
    write_records_jsonl(config.output_path, all);
  }
  return all;
}

FitResult fit_scaling(const std::vector<ResultRecord>& records,
                      const std::string& x_name, const std::string& y_name) {
  std::map<double, std::pair<double, std::int64_t>> groups;  // x -> (sum, n)
  for (const ResultRecord& r : records) {
    if (r.contains("error") || !r.contains(x_name) || !r.contains(y_name)) {
      continue;
    }
    const double x = as_number(r[x_name]);
    const double y = as_number(r[y_name]);
    auto& [sum, n] = groups[x];
    sum += y;
    ++n;
  }
  FitResult fit;
  std::vector<double> lx, ly;
  for (const auto& [x, agg] : groups) {
    const double mean = agg.first / static_cast<double>(agg.second);
    if (!(x > 0.0) || !(mean > 0.0)) {
      ++fit.points_dropped;
      std::fprintf(stderr,
                   "fit_scaling: dropping %s=%g (nonpositive mean %g)\n",
                   x_name.c_str(), x, mean);
      continue;
    }
    lx.push_back(std::log(x));
    ly.push_back(std::log(mean));
  }
  if (lx.size() < 3) {
    throw std::invalid_argument("fit_scaling: need at least 3 usable x values");
  }
  const auto n = static_cast<Eigen::Index>(lx.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd response(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = lx[i];
    design(i, 1) = 1.0;
    response(i) = ly[i];
  }
  const Eigen::Vector2d coef =
      (design.transpose() * design).ldlt().solve(design.transpose() * response);
  fit.slope = coef(0);
  fit.intercept = coef(1);
  const double mean_y = response.mean();
  const double ss_tot = (response.array() - mean_y).square().sum();
  const double ss_res = (response - design * coef).array().square().sum();
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.points_used = static_cast<int>(n);
  return fit;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records,
                                  const std::vector<std::string>& group_by,
                                  const std::string& value) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  std::map<std::vector<double>, std::vector<double>> groups;
  for (const ResultRecord& r : records) {
    if (r.contains("error") || !r.contains(value)) continue;
    std::vector<double> key;
    key.reserve(group_by.size());
    bool ok = true;
    for (const std::string& g : group_by) {
      if (!r.contains(g)) {
        ok = false;
        break;
      }
      key.push_back(as_number(r[g]));
    }
    if (ok) groups[key].push_back(as_number(r[value]));
  }
  if (groups.empty()) throw std::invalid_argument("summarize: empty group set");
  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, values] : groups) {
    SummaryRow row;
    for (std::size_t i = 0; i < group_by.size(); ++i) row.group[group_by[i]] = key[i];
    row.count = static_cast<std::int64_t>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.stddev = values.size() > 1
                     ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                     : 0.0;
    row.ci95 = 1.96 * row.stddev / std::sqrt(static_cast<double>(values.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_records_jsonl(const std::string& path,
                         const std::vector<ResultRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_records_jsonl: cannot open " + path);
  for (const ResultRecord& r : records) out << r.dump() << '\n';
  if (!out) throw std::runtime_error("write_records_jsonl: write failed");
}

std::vector<ResultRecord> read_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_records_jsonl: cannot open " + path);
  std::vector<ResultRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(ResultRecord::parse(line));
  }
  return records;
}

void write_records_csv(const std::string& path,
                       const std::vector<ResultRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_records_csv: cannot open " + path);
  std::vector<std::string> columns;
  std::set<std::string> seen;
  for (const ResultRecord& r : records) {
    for (const auto& [key, _] : r.items()) {
      if (seen.insert(key).second) columns.push_back(key);
    }
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << columns[i] << (i + 1 == columns.size() ? '\n' : ',');
  }
  for (const ResultRecord& r : records) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (r.contains(columns[i])) {
        const auto& v = r[columns[i]];
        if (v.is_string()) {
          std::string s = v.get<std::string>();
          std::replace(s.begin(), s.end(), ',', ';');
          out << '"' << s << '"';
        } else {
          out << v.dump();
        }
      }
      out << (i + 1 == columns.size() ? '\n' : ',');
    }
  }
  if (!out) throw std::runtime_error("write_records_csv: write failed");
}

}  // namespace covren
